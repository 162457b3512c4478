#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mugmatch/image.hpp"

namespace mugmatch {

using FaceVector = std::vector<double>;

/* PCA basis over vectorised face images.  `components` is k rows of length
 * dim; rows with eigenvalue >= 1e-12 are unit length and pairwise orthogonal.
 * A zero variance direction is kept as an all zero row with eigenvalue 0 and
 * reported by has_degenerate_components(). */
struct EigenModel {
  int dim = 0;
  int k = 0;
  std::vector<double> mean;         // dim
  std::vector<double> components;   // k * dim, row major
  std::vector<double> eigenvalues;  // k, non increasing, sample covariance scale

  const double* component(int j) const { return components.data() + static_cast<std::size_t>(j) * dim; }
  int active_components() const;
  bool has_degenerate_components() const { return active_components() < k; }
};

/* Row major scan of the pixels, widened to double. */
FaceVector vectorize(const GrayImage& img);

/* Clamps to [0, 1] on the way back to pixels. */
GrayImage face_to_image(const FaceVector& face, int width, int height);

/* Gram trick PCA: eigendecomposition of the N x N inner product matrix of the
 * centred images, eigenvalues rescaled by 1/(N-1) to sample covariance scale,
 * eigenvectors mapped back to pixel space and normalised.  Component signs
 * are fixed so the largest magnitude entry of each row is positive.
 * Throws TooFewImages (N < 2), DimensionMismatch (ragged input) and
 * KOutOfRange (k outside [1, N-1]). */
EigenModel train_eigenfaces(const std::vector<GrayImage>& images, int k);

std::vector<double> project(const FaceVector& face, const EigenModel& model);
std::vector<double> project(const GrayImage& img, const EigenModel& model);

/* mean + sum_j coeffs[j] * component[j]; unclamped. */
FaceVector reconstruct(const std::vector<double>& coeffs, const EigenModel& model);

struct EigenProjection {
  std::string identity_id;
  std::vector<double> coefficients;
};

struct RankedFace {
  std::string identity_id;
  double distance = 0.0;
  std::size_t gallery_index = 0;
};

/* Euclidean nearest neighbours over coefficient vectors, ascending distance,
 * enrollment order on ties.  Throws EmptyGallery / DimensionMismatch.  The
 * overload taking a model restricts the metric to its active (non degenerate)
 * leading components. */
std::vector<RankedFace> nearest_face(const std::vector<double>& query,
                                     const std::vector<EigenProjection>& gallery);
std::vector<RankedFace> nearest_face(const std::vector<double>& query,
                                     const std::vector<EigenProjection>& gallery,
                                     const EigenModel& model);

}  // namespace mugmatch

#include "mugmatch/eigenfaces.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {
constexpr double kDegenerateEigenvalue = 1e-12;
}

int EigenModel::active_components() const {
  int active = 0;
  while (active < k && eigenvalues[active] >= kDegenerateEigenvalue) ++active;
  return active;
}

FaceVector vectorize(const GrayImage& img) {
  return FaceVector(img.pixels.begin(), img.pixels.end());
}

GrayImage face_to_image(const FaceVector& face, int width, int height) {
  if (static_cast<std::size_t>(width) * height != face.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "face vector of length " + std::to_string(face.size()) + " is not " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
  GrayImage out(width, height);
  for (std::size_t i = 0; i < face.size(); ++i) {
    out.pixels[i] = static_cast<float>(std::clamp(face[i], 0.0, 1.0));
  }
  return out;
}

EigenModel train_eigenfaces(const std::vector<GrayImage>& images, int k) {
  const int n = static_cast<int>(images.size());
  if (n < 2) {
    throw Error(ErrorCode::TooFewImages, "need at least 2 images, got " + std::to_string(n));
  }
  const std::size_t dim = images[0].size();
  for (const GrayImage& img : images) {
    if (img.size() != dim || dim == 0) {
      throw Error(ErrorCode::DimensionMismatch, "training images differ in size");
    }
  }
  if (k < 1 || k > n - 1) {
    throw Error(ErrorCode::KOutOfRange,
                "k = " + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }

  // Centred data matrix, n rows of length dim.
  Eigen::MatrixXd data(n, static_cast<Eigen::Index>(dim));
  for (int i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      data(i, static_cast<Eigen::Index>(d)) = images[i].pixels[d];
    }
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;

  /* Gram trick: eigendecompose the n x n matrix data * data^T instead of the
   * dim x dim covariance; non zero spectra coincide up to the 1/(n-1) scale
   * and pixel space eigenvectors are recovered as data^T * v. */
  const Eigen::MatrixXd gram = data * data.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "eigendecomposition failed");
  }

  EigenModel model;
  model.dim = static_cast<int>(dim);
  model.k = k;
  model.mean.assign(mean.data(), mean.data() + dim);
  model.components.assign(static_cast<std::size_t>(k) * dim, 0.0);
  model.eigenvalues.assign(k, 0.0);

  // Eigen returns ascending eigenvalues; walk them from the top.
  for (int j = 0; j < k; ++j) {
    const int src = n - 1 - j;
    const double lambda = std::max(solver.eigenvalues()(src), 0.0);
    model.eigenvalues[j] = lambda / (n - 1);

    double* row = model.components.data() + static_cast<std::size_t>(j) * dim;
    if (model.eigenvalues[j] < kDegenerateEigenvalue) {
      model.eigenvalues[j] = 0.0;
      continue;  // zero variance direction: keep an all zero row
    }
    const Eigen::VectorXd face = data.transpose() * solver.eigenvectors().col(src);
    const double norm = face.norm();
    if (norm < 1e-12) {
      model.eigenvalues[j] = 0.0;
      continue;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      row[d] = face(static_cast<Eigen::Index>(d)) / norm;
    }
    // Deterministic sign: the largest magnitude entry comes out positive.
    std::size_t arg = 0;
    for (std::size_t d = 1; d < dim; ++d) {
      if (std::abs(row[d]) > std::abs(row[arg])) arg = d;
    }
    if (row[arg] < 0.0) {
      for (std::size_t d = 0; d < dim; ++d) row[d] = -row[d];
    }
  }
  return model;
}

std::vector<double> project(const FaceVector& face, const EigenModel& model) {
  if (static_cast<int>(face.size()) != model.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "face length " + std::to_string(face.size()) + " vs model dim " +
                    std::to_string(model.dim));
  }
  Eigen::Map<const Eigen::VectorXd> x(face.data(), model.dim);
  Eigen::Map<const Eigen::VectorXd> mu(model.mean.data(), model.dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> comps(
      model.components.data(), model.k, model.dim);
  const Eigen::VectorXd coeffs = comps * (x - mu);
  return std::vector<double>(coeffs.data(), coeffs.data() + model.k);
}

std::vector<double> project(const GrayImage& img, const EigenModel& model) {
  return project(vectorize(img), model);
}

FaceVector reconstruct(const std::vector<double>& coeffs, const EigenModel& model) {
  if (static_cast<int>(coeffs.size()) != model.k) {
    throw Error(ErrorCode::DimensionMismatch,
                "coefficient length " + std::to_string(coeffs.size()) + " vs k = " +
                    std::to_string(model.k));
  }
  FaceVector out(model.mean);
  for (int j = 0; j < model.k; ++j) {
    const double* row = model.component(j);
    for (int d = 0; d < model.dim; ++d) {
      out[d] += coeffs[j] * row[d];
    }
  }
  return out;
}

namespace {

std::vector<RankedFace> nearest_face_impl(const std::vector<double>& query,
                                          const std::vector<EigenProjection>& gallery,
                                          int metric_dims) {
  if (gallery.empty()) {
    throw Error(ErrorCode::EmptyGallery, "no enrolled projections");
  }
  for (const EigenProjection& p : gallery) {
    if (p.coefficients.size() != query.size()) {
      throw Error(ErrorCode::DimensionMismatch, "projection length differs from query");
    }
  }
  const int dims = metric_dims < 0 ? static_cast<int>(query.size())
                                   : std::min<int>(metric_dims, static_cast<int>(query.size()));

  std::vector<RankedFace> out;
  out.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    double acc = 0.0;
    for (int d = 0; d < dims; ++d) {
      const double diff = query[d] - gallery[i].coefficients[d];
      acc += diff * diff;
    }
    out.push_back({gallery[i].identity_id, std::sqrt(acc), i});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedFace& a, const RankedFace& b) { return a.distance < b.distance; });
  return out;
}

}  // namespace

std::vector<RankedFace> nearest_face(const std::vector<double>& query,
                                     const std::vector<EigenProjection>& gallery) {
  return nearest_face_impl(query, gallery, -1);
}

std::vector<RankedFace> nearest_face(const std::vector<double>& query,
                                     const std::vector<EigenProjection>& gallery,
                                     const EigenModel& model) {
  return nearest_face_impl(query, gallery, model.active_components());
}

}  // namespace mugmatch

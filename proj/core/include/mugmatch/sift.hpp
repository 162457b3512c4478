#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "mugmatch/image.hpp"

namespace mugmatch {

struct PyramidParams {
  int scales_per_octave = 3;         // S: levels probed for extrema per octave
  double base_sigma = 1.6;           // blur of pyramid level 0
  double contrast_threshold = 0.03;  // on [0, 1] intensities
  double edge_ratio = 10.0;          // max principal curvature ratio r
  double assumed_input_blur = 0.5;   // blur already present in the input
  int min_image_size = 16;           // smallest octave dimension
  bool upsample_input = false;       // start from a 2x upsampled image

  /* floor(log2(min(w, h) / min_image_size)) + 1, counted on the pyramid base
   * image (after optional upsampling). */
  int num_octaves_for(int width, int height) const;

  /* Throws InvalidArgument when a field is outside its documented range. */
  void validate() const;
};

/* Per octave: S + 3 progressively blurred images.  `sigma` is the absolute
 * blur in original image pixels, sigma0 * 2^(o + s/S) without upsampling. */
struct GaussianPyramid {
  struct Level {
    GrayImage image;
    double sigma = 0.0;
  };
  std::vector<std::vector<Level>> octaves;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double base_scale = 1.0;  // 0.5 when built from an upsampled input
};

/* Per octave: S + 2 difference images, dog[s] = gauss[s + 1] - gauss[s]. */
struct DoGPyramid {
  std::vector<std::vector<GrayImage>> octaves;
  int scales_per_octave = 3;
};

struct ExtremumCandidate {
  int octave = 0;
  int scale_index = 0;  // DoG level, in [1, S]
  int x = 0;            // octave local integer coordinates
  int y = 0;
};

struct Keypoint {
  float x = 0.0f;  // sub-pixel position in original image coordinates
  float y = 0.0f;
  int octave = 0;
  int scale_index = 0;      // DoG level the candidate settled in
  float sigma = 0.0f;       // absolute scale in original image pixels
  float orientation = 0.0f; // radians in [0, 2*pi)
  float response = 0.0f;    // interpolated DoG value
};

enum class KeypointRejection { LowContrast, EdgeResponse, Diverged };

struct Descriptor {
  std::array<float, 128> values{};
};

struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;  // parallel to keypoints
  int source_width = 0;
  int source_height = 0;
};

/* Throws ImageTooSmall when min(w, h) < min_image_size (after optional
 * upsampling the test still applies to the pyramid base). */
GaussianPyramid build_gaussian_pyramid(const GrayImage& img, const PyramidParams& params);

DoGPyramid build_dog_pyramid(const GaussianPyramid& pyramid);

/* Scans the 26 neighbour cube; a candidate must be strictly greater (or
 * strictly smaller) than all neighbours.  Border cells of each DoG image and
 * the outer DoG levels are never candidates. */
std::vector<ExtremumCandidate> detect_extrema(const DoGPyramid& dog);

/* Iterative 3D quadratic refinement (at most 5 solves).  Rejections are
 * reported in the order Diverged, LowContrast, EdgeResponse.  The returned
 * keypoint has no orientation yet. */
std::variant<Keypoint, KeypointRejection> localize_keypoint(
    const DoGPyramid& dog, const ExtremumCandidate& candidate,
    const PyramidParams& params, double base_scale = 1.0);

/* 36 bin gradient orientation histogram over a Gaussian window of width
 * 1.5 * sigma; every smoothed peak >= 80% of the maximum becomes one output
 * keypoint with a parabolically refined orientation.  A flat window yields an
 * empty vector (the keypoint is dropped). */
std::vector<Keypoint> assign_orientations(const GaussianPyramid& pyramid, const Keypoint& keypoint);

/* 4x4 spatial grid x 8 orientation bins, trilinear vote spreading, Gaussian
 * spatial weighting, then normalise / clamp 0.2 / renormalise applied to a
 * fixed point so the result is unit length with every component <= 0.2 within
 * tolerance.  Returns nullopt when the support window leaves the image or the
 * gradient energy is degenerate; such keypoints are dropped. */
std::optional<Descriptor> compute_descriptor(const GaussianPyramid& pyramid, const Keypoint& keypoint);

/* Full pipeline.  keypoints/descriptors stay parallel; ordering is
 * deterministic (octave, scale, row, column, orientation peak order). */
FeatureSet extract_features(const GrayImage& img, const PyramidParams& params = {});

}  // namespace mugmatch

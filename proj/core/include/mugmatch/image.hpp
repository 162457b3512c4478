#pragma once

#include <cstddef>
#include <vector>

namespace mugmatch {

/* Single channel image, row major, float intensities in [0, 1]. */
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
};

/* Interleaved RGB, row major, float intensities in [0, 1]. */
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // 3 floats per pixel

  ColorImage() = default;
  ColorImage(int w, int h, float fill = 0.0f)
      : width(w), height(h),
        pixels(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float at(int x, int y, int c) const {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }
  float& at(int x, int y, int c) {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }
  bool empty() const { return pixels.empty(); }
};

/* BT.601 luma: y = 0.299 r + 0.587 g + 0.114 b, computed in double and
 * clamped back to [0, 1].  Throws ZeroDimension on an empty image. */
GrayImage to_grayscale(const ColorImage& img);

/* Bilinear resampling with half pixel centre alignment; resizing to the
 * source size reproduces the source exactly.  Throws ZeroDimension if either
 * output dimension is < 1. */
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

/* Separable Gaussian convolution, kernel radius ceil(4 sigma), mirrored
 * borders (edge pixel not repeated).  Kernel and accumulation are double
 * precision.  Throws NonPositiveSigma unless sigma > 0. */
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/* Keeps every second pixel starting at (0, 0); output is floor(w/2) by
 * floor(h/2).  Throws TooSmall if either input dimension is < 2. */
GrayImage downsample_half(const GrayImage& img);

/* Doubles both dimensions; even output pixels copy the source, odd ones are
 * bilinear midpoints (edge clamped). */
GrayImage upsample_double(const GrayImage& img);

}  // namespace mugmatch

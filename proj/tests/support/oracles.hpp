#pragma once

/* Independent reference implementations used to cross-check the library.
 * These are deliberately written in the most direct way possible (dense
 * loops, no separability tricks, no early exits) and must not be "fixed" to
 * agree with the library; disagreements are library bugs. */

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mugmatch/image.hpp"
#include "mugmatch/sift.hpp"

namespace oracle {

inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

/* Direct 2-D convolution with an explicitly built 2-D Gaussian kernel
 * (normalised over the full window), mirrored borders. */
inline std::vector<double> dense_gaussian_2d(const mugmatch::GrayImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const int size = 2 * radius + 1;
  std::vector<double> kernel(static_cast<std::size_t>(size) * size);
  double sum = 0.0;
  for (int j = -radius; j <= radius; ++j) {
    for (int i = -radius; i <= radius; ++i) {
      const double v = std::exp(-(static_cast<double>(i) * i + static_cast<double>(j) * j) /
                                (2.0 * sigma * sigma));
      kernel[static_cast<std::size_t>(j + radius) * size + (i + radius)] = v;
      sum += v;
    }
  }
  for (double& v : kernel) v /= sum;

  std::vector<double> out(img.size(), 0.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[static_cast<std::size_t>(j + radius) * size + (i + radius)] *
                 img.at(reflect101(x + i, img.width), reflect101(y + j, img.height));
        }
      }
      out[static_cast<std::size_t>(y) * img.width + x] = acc;
    }
  }
  return out;
}

struct NearestTwoResult {
  int best_index = -1;
  double dist_best = std::numeric_limits<double>::infinity();
  double dist_second = std::numeric_limits<double>::infinity();
};

/* Exhaustive scan, full 128 term sums, strict-< updates in index order. */
inline NearestTwoResult nearest_two_scan(const mugmatch::Descriptor& query,
                                         const std::vector<mugmatch::Descriptor>& gallery) {
  NearestTwoResult result;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    double acc = 0.0;
    for (int d = 0; d < 128; ++d) {
      const double diff = static_cast<double>(query.values[d]) - gallery[i].values[d];
      acc += diff * diff;
    }
    const double dist = std::sqrt(acc);
    if (dist < result.dist_best) {
      result.dist_second = result.dist_best;
      result.dist_best = dist;
      result.best_index = static_cast<int>(i);
    } else if (dist < result.dist_second) {
      result.dist_second = dist;
    }
  }
  return result;
}

/* 26 neighbour scan over a DoG octave, written independently of the library's
 * candidate loop: collects (scale, x, y) triples of strict extrema. */
inline std::vector<std::array<int, 3>> extrema_scan(const std::vector<mugmatch::GrayImage>& levels,
                                                    int scales_per_octave) {
  std::vector<std::array<int, 3>> out;
  const int w = levels[0].width;
  const int h = levels[0].height;
  for (int s = 1; s <= scales_per_octave; ++s) {
    for (int y = 1; y < h - 1; ++y) {
      for (int x = 1; x < w - 1; ++x) {
        const float v = levels[s].at(x, y);
        int greater = 0;
        int smaller = 0;
        int total = 0;
        for (int ds = -1; ds <= 1; ++ds) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (ds == 0 && dy == 0 && dx == 0) continue;
              const float n = levels[s + ds].at(x + dx, y + dy);
              ++total;
              if (v > n) ++greater;
              if (v < n) ++smaller;
            }
          }
        }
        if (greater == total || smaller == total) {
          out.push_back({s, x, y});
        }
      }
    }
  }
  return out;
}

}  // namespace oracle

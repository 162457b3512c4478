#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mugmatch/image.hpp"
#include "mugmatch/sift.hpp"

namespace fixtures {

/* Unique per-process scratch directory, removed on destruction. */
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    const auto n = counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() /
            ("mugmatch_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/* Exact 90 degree counter-clockwise rotation: out(x, y) = in(W-1-y, x).
 * Pure pixel permutation, no interpolation. */
inline mugmatch::GrayImage rotate90_ccw(const mugmatch::GrayImage& in) {
  mugmatch::GrayImage out(in.height, in.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = in.at(in.width - 1 - y, x);
    }
  }
  return out;
}

/* Deterministic pseudo-random unit descriptor (values clamped to the 0.2
 * ceiling then renormalised, mirroring the library's invariants). */
inline mugmatch::Descriptor random_descriptor(std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  mugmatch::Descriptor d{};
  double norm = 0.0;
  for (auto& v : d.values) {
    v = static_cast<float>(uni(engine));
    norm += static_cast<double>(v) * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : d.values) {
    v = std::min(static_cast<float>(v / norm), 0.2f);
  }
  norm = 0.0;
  for (const auto& v : d.values) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  for (auto& v : d.values) v = static_cast<float>(v / norm);
  return d;
}

/* A keypoint placed at (x, y) with the given orientation; remaining fields
 * filled with plausible defaults. */
inline mugmatch::Keypoint make_keypoint(float x, float y, float sigma = 2.0f,
                                        float orientation = 0.0f) {
  mugmatch::Keypoint kp{};
  kp.x = x;
  kp.y = y;
  kp.sigma = sigma;
  kp.orientation = orientation;
  kp.octave = 0;
  kp.scale_index = 1;
  kp.response = 0.05f;
  return kp;
}

}  // namespace fixtures

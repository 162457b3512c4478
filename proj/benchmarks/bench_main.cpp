#include <benchmark/benchmark.h>

#include <vector>

#include "mugmatch/eigenfaces.hpp"
#include "mugmatch/image.hpp"
#include "mugmatch/matching.hpp"
#include "mugmatch/sift.hpp"
#include "mugmatch/synthetic.hpp"

using namespace mugmatch;

namespace {

const GrayImage& probe_image() {
  static const GrayImage img = textured_test_image(300, 300, 7);
  return img;
}

const GrayImage& shifted_probe() {
  // Crop of a larger texture from the same generator: a realistic partial
  // overlap for the matching benchmarks.
  static const GrayImage img = [] {
    const GrayImage big = textured_test_image(340, 340, 7);
    GrayImage out(300, 300);
    for (int y = 0; y < 300; ++y) {
      for (int x = 0; x < 300; ++x) out.at(x, y) = big.at(x + 20, y + 12);
    }
    return out;
  }();
  return img;
}

const FeatureSet& probe_features() {
  static const FeatureSet fs = extract_features(probe_image());
  return fs;
}

const FeatureSet& shifted_features() {
  static const FeatureSet fs = extract_features(shifted_probe());
  return fs;
}

const std::vector<GrayImage>& face_corpus() {
  static const std::vector<GrayImage> faces = [] {
    std::vector<GrayImage> out;
    for (int i = 0; i < 20; ++i) {
      out.push_back(resize_bilinear(synthetic_face(i, 300, 300), 96, 96));
    }
    return out;
  }();
  return faces;
}

void BM_GaussianBlur300(benchmark::State& state) {
  const GrayImage& img = probe_image();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_blur(img, 1.6));
  }
}
BENCHMARK(BM_GaussianBlur300);

void BM_BuildPyramid300(benchmark::State& state) {
  const GrayImage& img = probe_image();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_gaussian_pyramid(img, PyramidParams{}));
  }
}
BENCHMARK(BM_BuildPyramid300);

void BM_ExtractFeatures300(benchmark::State& state) {
  const GrayImage& img = probe_image();
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(img));
  }
}
BENCHMARK(BM_ExtractFeatures300)->Unit(benchmark::kMillisecond);

void BM_NearestTwo(benchmark::State& state) {
  const FeatureSet& gallery = probe_features();
  const Descriptor& query = shifted_features().descriptors.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(nearest_two(query, gallery));
  }
}
BENCHMARK(BM_NearestTwo);

void BM_MatchFeatures(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratio_match(shifted_features(), probe_features(), 0.8));
  }
}
BENCHMARK(BM_MatchFeatures)->Unit(benchmark::kMillisecond);

void BM_AlrFilter(benchmark::State& state) {
  const auto matches = ratio_match(shifted_features(), probe_features(), 0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        alr_filter(matches, shifted_features(), probe_features(), AlrParams{}));
  }
}
BENCHMARK(BM_AlrFilter);

void BM_TrainEigenfaces(benchmark::State& state) {
  const auto& faces = face_corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_eigenfaces(faces, 19));
  }
}
BENCHMARK(BM_TrainEigenfaces)->Unit(benchmark::kMillisecond);

void BM_ProjectFace(benchmark::State& state) {
  const auto& faces = face_corpus();
  static const EigenModel model = train_eigenfaces(faces, 19);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(faces[3], model));
  }
}
BENCHMARK(BM_ProjectFace);

}  // namespace

BENCHMARK_MAIN();

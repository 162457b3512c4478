#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mugmatch/errors.hpp"
#include "mugmatch/gallery.hpp"
#include "mugmatch/image_io.hpp"
#include "mugmatch/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace mugmatch;

namespace {

ColorImage to_color(const GrayImage& gray) {
  ColorImage out(gray.width, gray.height);
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = gray.at(x, y);
    }
  }
  return out;
}

GalleryIndex small_gallery(int faces, int canonical = 96) {
  GalleryIndex gallery = make_gallery(PyramidParams{}, canonical, canonical);
  for (int i = 0; i < faces; ++i) {
    const std::string id = "id" + std::to_string(i);
    enroll(gallery, id, "person " + std::to_string(i), to_color(synthetic_face(i, 256, 256)));
  }
  return gallery;
}

void corrupt_byte(const std::filesystem::path& path, std::size_t offset, char value) {
  std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
  REQUIRE(file.good());
  file.seekp(static_cast<std::streamoff>(offset));
  file.put(value);
}

}  // namespace

TEST_SUITE("gallery") {

TEST_CASE("feature files round trip bit exactly") {
  fixtures::TempDir dir("features");
  const GrayImage img = textured_test_image(128, 128, 17);
  const FeatureSet features = extract_features(img);
  REQUIRE(!features.keypoints.empty());

  const PyramidParams params;
  const std::uint64_t fp = params_fingerprint(params, 128, 128);
  const auto path = dir.path() / "probe.mmft";
  save_features(path, features, fp);
  const FeatureSet loaded = load_features(path, fp, params);

  REQUIRE(loaded.keypoints.size() == features.keypoints.size());
  for (std::size_t i = 0; i < features.keypoints.size(); ++i) {
    CHECK(loaded.keypoints[i].x == features.keypoints[i].x);
    CHECK(loaded.keypoints[i].y == features.keypoints[i].y);
    CHECK(loaded.keypoints[i].sigma == features.keypoints[i].sigma);
    CHECK(loaded.keypoints[i].orientation == features.keypoints[i].orientation);
    CHECK(loaded.keypoints[i].response == features.keypoints[i].response);
    CHECK(loaded.keypoints[i].octave == features.keypoints[i].octave);
    CHECK(loaded.keypoints[i].scale_index == features.keypoints[i].scale_index);
    for (int d = 0; d < 128; ++d) {
      CHECK(loaded.descriptors[i].values[d] == features.descriptors[i].values[d]);
    }
  }
}

TEST_CASE("corrupted magic and parameter mismatch raise distinct errors") {
  fixtures::TempDir dir("corrupt");
  const GrayImage img = textured_test_image(96, 96, 18);
  const FeatureSet features = extract_features(img);
  const PyramidParams params;
  const std::uint64_t fp = params_fingerprint(params, 96, 96);
  const auto path = dir.path() / "probe.mmft";
  save_features(path, features, fp);

  SUBCASE("bad magic is a format error") {
    corrupt_byte(path, 0, 'X');
    try {
      load_features(path, fp, params);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  }

  SUBCASE("wrong fingerprint is a parameter mismatch") {
    try {
      load_features(path, fp ^ 0xdeadbeefULL, params);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParamsMismatch);
    }
  }

  SUBCASE("unsupported version is a format error") {
    corrupt_byte(path, 4, 9);
    try {
      load_features(path, fp, params);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  }

  SUBCASE("truncation is a format error") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
    try {
      load_features(path, fp, params);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  }
}

TEST_CASE("the fingerprint tracks every extraction parameter") {
  PyramidParams params;
  const std::uint64_t base = params_fingerprint(params, 300, 300);
  CHECK(params_fingerprint(params, 300, 300) == base);
  CHECK(params_fingerprint(params, 301, 300) != base);

  PyramidParams other = params;
  other.scales_per_octave = 4;
  CHECK(params_fingerprint(other, 300, 300) != base);
  other = params;
  other.base_sigma = 1.7;
  CHECK(params_fingerprint(other, 300, 300) != base);
  other = params;
  other.contrast_threshold = 0.04;
  CHECK(params_fingerprint(other, 300, 300) != base);
  other = params;
  other.upsample_input = true;
  CHECK(params_fingerprint(other, 300, 300) != base);
}

TEST_CASE("gallery save and load round trips records and features") {
  fixtures::TempDir dir("roundtrip");
  GalleryIndex gallery = small_gallery(3);
  train_eigen_model(gallery, 2);
  save_gallery(gallery, dir.path());

  const GalleryIndex loaded = load_gallery(dir.path(), PyramidParams{}, 96, 96);
  REQUIRE(loaded.records.size() == 3);
  REQUIRE(loaded.model.has_value());
  CHECK(loaded.projections.size() == 3);

  for (std::size_t r = 0; r < 3; ++r) {
    const IdentityRecord& a = gallery.records[r];
    const IdentityRecord& b = loaded.records[r];
    CHECK(a.identity_id == b.identity_id);
    CHECK(a.label == b.label);
    REQUIRE(a.features.keypoints.size() == b.features.keypoints.size());
    for (std::size_t i = 0; i < a.features.keypoints.size(); ++i) {
      for (int d = 0; d < 128; ++d) {
        CHECK(a.features.descriptors[i].values[d] == b.features.descriptors[i].values[d]);
      }
    }
    // Canonical images are stored as float and must survive bit exactly.
    REQUIRE(a.canonical.pixels.size() == b.canonical.pixels.size());
    for (std::size_t i = 0; i < a.canonical.pixels.size(); ++i) {
      CHECK(a.canonical.pixels[i] == b.canonical.pixels[i]);
    }
  }
}

TEST_CASE("loading with different extraction parameters is rejected") {
  fixtures::TempDir dir("params");
  save_gallery(small_gallery(2), dir.path());
  PyramidParams other;
  other.contrast_threshold = 0.05;
  try {
    load_gallery(dir.path(), other, 96, 96);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParamsMismatch);
  }
}

TEST_CASE("manifest violations are format errors") {
  fixtures::TempDir dir("manifest");
  save_gallery(small_gallery(2), dir.path());
  const auto manifest = dir.path() / "manifest.txt";

  SUBCASE("missing header") {
    std::ofstream out(manifest, std::ios::trunc);
    out << "id0\tperson\tface_000.mmft\n";
    out.close();
    CHECK_THROWS_AS(load_gallery(dir.path(), PyramidParams{}, 96, 96), Error);
  }

  SUBCASE("duplicate identity") {
    std::ofstream out(manifest, std::ios::app);
    out << "id0\tagain\tface_000.mmft\n";
    out.close();
    try {
      load_gallery(dir.path(), PyramidParams{}, 96, 96);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  }

  SUBCASE("path escape in a feature name") {
    std::ofstream out(manifest, std::ios::app);
    out << "id9\tsneaky\t../outside.mmft\n";
    out.close();
    try {
      load_gallery(dir.path(), PyramidParams{}, 96, 96);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  }

  SUBCASE("wrong field count") {
    std::ofstream out(manifest, std::ios::app);
    out << "id9\tno-feature-field\n";
    out.close();
    CHECK_THROWS_AS(load_gallery(dir.path(), PyramidParams{}, 96, 96), Error);
  }

  SUBCASE("referenced feature file missing") {
    std::filesystem::remove(dir.path() / "face_001.mmft");
    try {
      load_gallery(dir.path(), PyramidParams{}, 96, 96);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
  }
}

TEST_CASE("a canonical image of the wrong size is rejected") {
  fixtures::TempDir dir("canon");
  save_gallery(small_gallery(2), dir.path());
  write_pfm((dir.path() / "face_000.pfm").string(), textured_test_image(32, 32, 1));
  try {
    load_gallery(dir.path(), PyramidParams{}, 96, 96);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
  }
}

TEST_CASE("missing gallery directory is an io error") {
  try {
    load_gallery("/nonexistent/gallery/dir", PyramidParams{}, 96, 96);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("eigen models round trip at f32 precision") {
  fixtures::TempDir dir("eigen");
  GalleryIndex gallery = small_gallery(4, 48);
  train_eigen_model(gallery, 3);
  REQUIRE(gallery.model.has_value());
  const auto path = dir.path() / "model.mmpc";
  save_eigen_model(path, *gallery.model);
  const EigenModel loaded = load_eigen_model(path);
  CHECK(loaded.dim == gallery.model->dim);
  CHECK(loaded.k == gallery.model->k);
  for (int d = 0; d < loaded.dim; ++d) {
    CHECK(loaded.mean[d] == static_cast<double>(static_cast<float>(gallery.model->mean[d])));
  }
  for (int j = 0; j < loaded.k; ++j) {
    CHECK(loaded.eigenvalues[j] ==
          static_cast<double>(static_cast<float>(gallery.model->eigenvalues[j])));
    for (int d = 0; d < loaded.dim; ++d) {
      CHECK(loaded.component(j)[d] ==
            static_cast<double>(static_cast<float>(gallery.model->component(j)[d])));
    }
  }
}

TEST_CASE("saving without a model clears a stale eigen file") {
  fixtures::TempDir dir("stale");
  GalleryIndex gallery = small_gallery(3);
  train_eigen_model(gallery, 2);
  save_gallery(gallery, dir.path());
  CHECK(std::filesystem::exists(dir.path() / "eigen.mmpc"));

  // Enrolling resets the model; saving again must remove the stale file.
  enroll(gallery, "id3", "late arrival", to_color(synthetic_face(3, 256, 256)));
  CHECK(!gallery.model.has_value());
  save_gallery(gallery, dir.path());
  CHECK(!std::filesystem::exists(dir.path() / "eigen.mmpc"));

  const GalleryIndex loaded = load_gallery(dir.path(), PyramidParams{}, 96, 96);
  CHECK(loaded.records.size() == 4);
  CHECK(!loaded.model.has_value());
}

TEST_CASE("enrollment validation") {
  GalleryIndex gallery = make_gallery(PyramidParams{}, 96, 96);
  const ColorImage face = to_color(synthetic_face(0, 256, 256));
  enroll(gallery, "id0", "zero", face);

  try {
    enroll(gallery, "id0", "again", face);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateIdentity);
  }
  CHECK_THROWS_AS(enroll(gallery, "", "anon", face), Error);
  CHECK_THROWS_AS(enroll(gallery, "id\t1", "tabbed", face), Error);
  CHECK_THROWS_AS(enroll(gallery, "id1", "bad\nlabel", face), Error);

  CHECK(gallery.find("id0") != nullptr);
  CHECK(gallery.find("missing") == nullptr);
}

TEST_CASE("preprocessing normalises to the canonical size") {
  const ColorImage input = to_color(textured_test_image(123, 77, 3));
  const GrayImage out = preprocess_image(input, 96, 96);
  CHECK(out.width == 96);
  CHECK(out.height == 96);
}

TEST_CASE("scale indices survive the float round trip") {
  fixtures::TempDir dir("scales");
  const GrayImage img = textured_test_image(160, 160, 19);
  const FeatureSet features = extract_features(img);
  const PyramidParams params;
  const std::uint64_t fp = params_fingerprint(params, 160, 160);
  const auto path = dir.path() / "probe.mmft";
  save_features(path, features, fp);
  const FeatureSet loaded = load_features(path, fp, params);
  REQUIRE(loaded.keypoints.size() == features.keypoints.size());
  for (std::size_t i = 0; i < features.keypoints.size(); ++i) {
    CHECK(loaded.keypoints[i].scale_index == features.keypoints[i].scale_index);
  }
}

}  // TEST_SUITE

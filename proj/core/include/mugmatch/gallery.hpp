#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mugmatch/eigenfaces.hpp"
#include "mugmatch/image.hpp"
#include "mugmatch/sift.hpp"

namespace mugmatch {

struct IdentityRecord {
  std::string identity_id;
  std::string label;
  std::string image_path;   // informational source path, may be empty
  GrayImage canonical;      // preprocessed canonical-size grayscale image
  FeatureSet features;
};

struct GalleryIndex {
  std::vector<IdentityRecord> records;  // enrollment order
  int canonical_width = 300;
  int canonical_height = 300;
  PyramidParams params;

  /* PCA state; absent until trained, reset by enroll (it would be stale). */
  std::optional<EigenModel> model;
  std::vector<std::vector<double>> projections;  // parallel to records

  const IdentityRecord* find(const std::string& identity_id) const;
};

GalleryIndex make_gallery(const PyramidParams& params = {}, int canonical_width = 300,
                          int canonical_height = 300);

/* FNV-1a over the extraction parameters and the canonical size; stored in
 * every feature file and validated on load. */
std::uint64_t params_fingerprint(const PyramidParams& params, int canonical_width,
                                 int canonical_height);

/* Grayscale conversion + bilinear resize to the canonical size. */
GrayImage preprocess_image(const ColorImage& img, int canonical_width, int canonical_height);

/* Preprocesses, extracts features and appends a record.  identity_id must be
 * unique (DuplicateIdentity), non empty and free of tabs and newlines, as
 * must label (InvalidArgument). */
void enroll(GalleryIndex& gallery, const std::string& identity_id, const std::string& label,
            const ColorImage& image, const std::string& image_path = "");

/* Trains the eigenface model on the gallery's canonical images and projects
 * every record.  Forwards the eigenfaces errors (TooFewImages, KOutOfRange). */
void train_eigen_model(GalleryIndex& gallery, int k);

/* On-disk layout in `dir`:
 *   manifest.txt   header "MUGMATCH-GALLERY v1", then one record per line:
 *                  identity_id <TAB> label <TAB> feature filename
 *   face_NNN.mmft  per record feature file (magic MMFT, version byte, params
 *                  fingerprint, keypoint count, then per keypoint x, y, sigma,
 *                  orientation, response, octave as little endian f32 plus 128
 *                  f32 descriptor components)
 *   face_NNN.pfm   canonical image, float, bit exact
 *   eigen.mmpc     optional eigen model (magic MMPC, version byte, u32 dim,
 *                  u32 k, then mean, components and eigenvalues as f32)
 * save removes a leftover eigen.mmpc when the index holds no model. */
void save_gallery(const GalleryIndex& gallery, const std::filesystem::path& dir);

/* Loads and validates a gallery directory.  Structural damage raises
 * FormatError (bad magic or version, truncation, manifest violations) or
 * IoError (unreadable files); a fingerprint that does not match `expected`
 * raises ParamsMismatch.  Projections are recomputed when a model is found. */
GalleryIndex load_gallery(const std::filesystem::path& dir, const PyramidParams& expected = {},
                          int canonical_width = 300, int canonical_height = 300);

/* Feature file IO, exposed for tests and tools. */
void save_features(const std::filesystem::path& path, const FeatureSet& features,
                   std::uint64_t fingerprint);
FeatureSet load_features(const std::filesystem::path& path, std::uint64_t expected_fingerprint,
                         const PyramidParams& params);

void save_eigen_model(const std::filesystem::path& path, const EigenModel& model);
EigenModel load_eigen_model(const std::filesystem::path& path);

}  // namespace mugmatch

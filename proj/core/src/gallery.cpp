#include "mugmatch/gallery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mugmatch/errors.hpp"
#include "mugmatch/image_io.hpp"

namespace mugmatch {

namespace {

constexpr char kManifestName[] = "manifest.txt";
constexpr char kManifestHeader[] = "MUGMATCH-GALLERY v1";
constexpr char kEigenName[] = "eigen.mmpc";

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u64le(std::string& out, std::uint64_t v) {
  put_u32le(out, static_cast<std::uint32_t>(v & 0xffffffffu));
  put_u32le(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32le(std::string& out, float v) {
  put_u32le(out, std::bit_cast<std::uint32_t>(v));
}

class Cursor {
public:
  Cursor(const std::string& data, const std::string& what) : data_(data), what_(what) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64le() {
    const std::uint64_t lo = u32le();
    const std::uint64_t hi = u32le();
    return lo | (hi << 32);
  }
  float f32le() { return std::bit_cast<float>(u32le()); }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw Error(ErrorCode::FormatError, what_ + ": truncated");
    }
  }
  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return std::move(buffer).str();
}

void write_binary(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void fnv1a(std::uint64_t& hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
}

void fnv1a_i32(std::uint64_t& hash, std::int32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>((static_cast<std::uint32_t>(v) >> (8 * i)) & 0xff);
  fnv1a(hash, b, 4);
}

void fnv1a_f64(std::uint64_t& hash, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff);
  fnv1a(hash, b, 8);
}

void validate_name(const std::string& value, const char* what) {
  if (value.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not contain tabs or newlines");
  }
}

std::string record_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "face_%03zu", index);
  return buf;
}

}  // namespace

const IdentityRecord* GalleryIndex::find(const std::string& identity_id) const {
  for (const IdentityRecord& r : records) {
    if (r.identity_id == identity_id) return &r;
  }
  return nullptr;
}

GalleryIndex make_gallery(const PyramidParams& params, int canonical_width, int canonical_height) {
  params.validate();
  if (canonical_width < 1 || canonical_height < 1) {
    throw Error(ErrorCode::ZeroDimension, "canonical size must be positive");
  }
  GalleryIndex g;
  g.params = params;
  g.canonical_width = canonical_width;
  g.canonical_height = canonical_height;
  return g;
}

std::uint64_t params_fingerprint(const PyramidParams& params, int canonical_width,
                                 int canonical_height) {
  std::uint64_t hash = 1469598103934665603ull;  // FNV offset basis
  fnv1a(hash, "MMv1", 4);
  fnv1a_i32(hash, params.scales_per_octave);
  fnv1a_f64(hash, params.base_sigma);
  fnv1a_f64(hash, params.contrast_threshold);
  fnv1a_f64(hash, params.edge_ratio);
  fnv1a_f64(hash, params.assumed_input_blur);
  fnv1a_i32(hash, params.min_image_size);
  fnv1a_i32(hash, params.upsample_input ? 1 : 0);
  fnv1a_i32(hash, canonical_width);
  fnv1a_i32(hash, canonical_height);
  return hash;
}

GrayImage preprocess_image(const ColorImage& img, int canonical_width, int canonical_height) {
  return resize_bilinear(to_grayscale(img), canonical_width, canonical_height);
}

void enroll(GalleryIndex& gallery, const std::string& identity_id, const std::string& label,
            const ColorImage& image, const std::string& image_path) {
  if (identity_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "identity_id must not be empty");
  }
  validate_name(identity_id, "identity_id");
  validate_name(label, "label");
  if (gallery.find(identity_id) != nullptr) {
    throw Error(ErrorCode::DuplicateIdentity, "'" + identity_id + "' is already enrolled");
  }

  IdentityRecord record;
  record.identity_id = identity_id;
  record.label = label;
  record.image_path = image_path;
  record.canonical = preprocess_image(image, gallery.canonical_width, gallery.canonical_height);
  record.features = extract_features(record.canonical, gallery.params);
  gallery.records.push_back(std::move(record));

  // Any trained eigen model no longer covers the gallery.
  gallery.model.reset();
  gallery.projections.clear();
}

void train_eigen_model(GalleryIndex& gallery, int k) {
  std::vector<GrayImage> images;
  images.reserve(gallery.records.size());
  for (const IdentityRecord& r : gallery.records) images.push_back(r.canonical);
  EigenModel model = train_eigenfaces(images, k);

  gallery.projections.clear();
  gallery.projections.reserve(gallery.records.size());
  for (const IdentityRecord& r : gallery.records) {
    gallery.projections.push_back(project(r.canonical, model));
  }
  gallery.model = std::move(model);
}

void save_features(const std::filesystem::path& path, const FeatureSet& features,
                   std::uint64_t fingerprint) {
  std::string out;
  out.reserve(64 + features.keypoints.size() * (6 + 128) * 4);
  out += "MMFT";
  out.push_back(static_cast<char>(1));  // version
  put_u64le(out, fingerprint);
  put_u32le(out, static_cast<std::uint32_t>(features.keypoints.size()));
  for (std::size_t i = 0; i < features.keypoints.size(); ++i) {
    const Keypoint& kp = features.keypoints[i];
    put_f32le(out, kp.x);
    put_f32le(out, kp.y);
    put_f32le(out, kp.sigma);
    put_f32le(out, kp.orientation);
    put_f32le(out, kp.response);
    put_f32le(out, static_cast<float>(kp.octave));
    for (float v : features.descriptors[i].values) put_f32le(out, v);
  }
  write_binary(path, out);
}

FeatureSet load_features(const std::filesystem::path& path, std::uint64_t expected_fingerprint,
                         const PyramidParams& params) {
  const std::string data = read_binary(path);
  Cursor cur(data, path.filename().string());
  if (data.size() < 4 || data.compare(0, 4, "MMFT") != 0) {
    throw Error(ErrorCode::FormatError, path.filename().string() + ": bad magic");
  }
  cur.u32le();  // skip the magic just validated
  const std::uint8_t version = cur.u8();
  if (version != 1) {
    throw Error(ErrorCode::FormatError,
                path.filename().string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint64_t fingerprint = cur.u64le();
  if (fingerprint != expected_fingerprint) {
    throw Error(ErrorCode::ParamsMismatch,
                path.filename().string() + ": feature file was built with different parameters");
  }
  const std::uint32_t count = cur.u32le();
  if (static_cast<std::uint64_t>(count) * (6 + 128) * 4 != cur.remaining()) {
    throw Error(ErrorCode::FormatError, path.filename().string() + ": size does not match count");
  }

  const double base_scale = params.upsample_input ? 0.5 : 1.0;
  const int S = params.scales_per_octave;

  FeatureSet features;
  features.keypoints.reserve(count);
  features.descriptors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Keypoint kp;
    kp.x = cur.f32le();
    kp.y = cur.f32le();
    kp.sigma = cur.f32le();
    kp.orientation = cur.f32le();
    kp.response = cur.f32le();
    kp.octave = static_cast<int>(cur.f32le());
    /* scale_index is not stored; recover it from the absolute scale. */
    const double rel = kp.sigma / (params.base_sigma * base_scale);
    if (rel > 0.0) {
      const double s_cont = S * (std::log2(rel) - kp.octave);
      kp.scale_index = std::clamp(static_cast<int>(std::llround(s_cont)), 1, S);
    } else {
      kp.scale_index = 1;
    }
    Descriptor desc;
    for (float& v : desc.values) v = cur.f32le();
    features.keypoints.push_back(kp);
    features.descriptors.push_back(desc);
  }
  return features;
}

void save_eigen_model(const std::filesystem::path& path, const EigenModel& model) {
  std::string out;
  out.reserve(16 + (model.mean.size() + model.components.size() + model.eigenvalues.size()) * 4);
  out += "MMPC";
  out.push_back(static_cast<char>(1));  // version
  put_u32le(out, static_cast<std::uint32_t>(model.dim));
  put_u32le(out, static_cast<std::uint32_t>(model.k));
  for (double v : model.mean) put_f32le(out, static_cast<float>(v));
  for (double v : model.components) put_f32le(out, static_cast<float>(v));
  for (double v : model.eigenvalues) put_f32le(out, static_cast<float>(v));
  write_binary(path, out);
}

EigenModel load_eigen_model(const std::filesystem::path& path) {
  const std::string data = read_binary(path);
  Cursor cur(data, path.filename().string());
  if (data.size() < 4 || data.compare(0, 4, "MMPC") != 0) {
    throw Error(ErrorCode::FormatError, path.filename().string() + ": bad magic");
  }
  cur.u32le();
  const std::uint8_t version = cur.u8();
  if (version != 1) {
    throw Error(ErrorCode::FormatError,
                path.filename().string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint64_t dim = cur.u32le();
  const std::uint64_t k = cur.u32le();
  if (dim == 0 || dim > 100'000'000ull || k == 0 || k > 1'000'000ull) {
    throw Error(ErrorCode::FormatError, path.filename().string() + ": implausible dimensions");
  }
  if ((dim + k * dim + k) * 4 != cur.remaining()) {
    throw Error(ErrorCode::FormatError, path.filename().string() + ": size does not match header");
  }

  EigenModel model;
  model.dim = static_cast<int>(dim);
  model.k = static_cast<int>(k);
  model.mean.resize(dim);
  model.components.resize(k * dim);
  model.eigenvalues.resize(k);
  for (double& v : model.mean) v = cur.f32le();
  for (double& v : model.components) v = cur.f32le();
  for (double& v : model.eigenvalues) v = cur.f32le();
  return model;
}

void save_gallery(const GalleryIndex& gallery, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create gallery directory " + dir.string());
  }

  const std::uint64_t fingerprint =
      params_fingerprint(gallery.params, gallery.canonical_width, gallery.canonical_height);

  std::string manifest = std::string(kManifestHeader) + "\n";
  for (std::size_t i = 0; i < gallery.records.size(); ++i) {
    const IdentityRecord& record = gallery.records[i];
    const std::string stem = record_stem(i);
    manifest += record.identity_id + "\t" + record.label + "\t" + stem + ".mmft\n";
    save_features(dir / (stem + ".mmft"), record.features, fingerprint);
    write_pfm(dir / (stem + ".pfm"), record.canonical);
  }
  write_binary(dir / kManifestName, manifest);

  const std::filesystem::path eigen_path = dir / kEigenName;
  if (gallery.model.has_value()) {
    save_eigen_model(eigen_path, *gallery.model);
  } else {
    std::filesystem::remove(eigen_path, ec);  // drop a stale model from an earlier save
  }
}

GalleryIndex load_gallery(const std::filesystem::path& dir, const PyramidParams& expected,
                          int canonical_width, int canonical_height) {
  GalleryIndex gallery = make_gallery(expected, canonical_width, canonical_height);
  const std::uint64_t fingerprint =
      params_fingerprint(expected, canonical_width, canonical_height);

  const std::string manifest = read_binary(dir / kManifestName);
  std::istringstream lines(manifest);
  std::string line;
  if (!std::getline(lines, line) || line != kManifestHeader) {
    throw Error(ErrorCode::FormatError, "manifest header is not '" + std::string(kManifestHeader) + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos) {
      throw Error(ErrorCode::FormatError,
                  "manifest line " + std::to_string(line_no) + " does not have 3 fields");
    }
    IdentityRecord record;
    record.identity_id = line.substr(0, t1);
    record.label = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string feature_name = line.substr(t2 + 1);
    if (record.identity_id.empty() || feature_name.empty()) {
      throw Error(ErrorCode::FormatError, "manifest line " + std::to_string(line_no) + " is incomplete");
    }
    if (feature_name.find('/') != std::string::npos || feature_name.find("..") != std::string::npos) {
      throw Error(ErrorCode::FormatError, "manifest feature path '" + feature_name + "' must be a plain filename");
    }
    if (gallery.find(record.identity_id) != nullptr) {
      throw Error(ErrorCode::FormatError, "duplicate identity '" + record.identity_id + "' in manifest");
    }

    record.features = load_features(dir / feature_name, fingerprint, expected);

    std::filesystem::path image_path = dir / feature_name;
    image_path.replace_extension(".pfm");
    record.canonical = load_gray(image_path);
    if (record.canonical.width != canonical_width || record.canonical.height != canonical_height) {
      throw Error(ErrorCode::FormatError,
                  image_path.filename().string() + " is not the canonical size");
    }
    record.image_path = image_path.string();
    gallery.records.push_back(std::move(record));
  }

  const std::filesystem::path eigen_path = dir / kEigenName;
  if (std::filesystem::exists(eigen_path)) {
    EigenModel model = load_eigen_model(eigen_path);
    if (model.dim != canonical_width * canonical_height) {
      throw Error(ErrorCode::FormatError, "eigen model dimension does not match the canonical size");
    }
    gallery.projections.clear();
    gallery.projections.reserve(gallery.records.size());
    for (const IdentityRecord& r : gallery.records) {
      gallery.projections.push_back(project(r.canonical, model));
    }
    gallery.model = std::move(model);
  }
  return gallery;
}

}  // namespace mugmatch

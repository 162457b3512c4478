#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mugmatch/errors.hpp"
#include "mugmatch/eval.hpp"
#include "mugmatch/gallery.hpp"
#include "mugmatch/image_io.hpp"
#include "mugmatch/matching.hpp"
#include "mugmatch/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mugmatch;

namespace {

struct Options {
  std::string gallery_dir;
  std::string id;
  std::string label;
  std::string image;
  std::string output;
  std::string method = "sift";
  std::string preset = "none";
  std::string format = "text";
  std::string queries_file;
  std::string cmc_prefix;
  std::string out_dir;
  double ratio = 0.8;
  int eigen_k = 0;  // 0: pick min(N - 1, 40)
  int top = 0;      // 0: all rows
  std::uint64_t seed = 0;
  int count = 20;
  int size = 300;
  // transform op flags; NaN-free sentinel: negative means unset where invalid
  double warp = -1.0;
  int warp_grid = 4;
  double brightness_delta = 0.0;
  bool has_brightness = false;
  double contrast_gamma = 0.0;
  double blur_sigma = 0.0;
  double occlude_fraction = -1.0;
  double noise_sigma = -1.0;
};

GalleryIndex load_gallery_checked(const std::string& dir) {
  return load_gallery(fs::path(dir));
}

GrayImage load_query_image(const GalleryIndex& gallery, const std::string& path) {
  const ColorImage color = load_color(path);
  return preprocess_image(color, gallery.canonical_width, gallery.canonical_height);
}

void save_by_extension(const fs::path& path, const GrayImage& img) {
  const std::string ext = path.extension().string();
  if (ext == ".png") {
    write_png_gray(path, img);
  } else if (ext == ".pgm") {
    write_pgm(path, img);
  } else if (ext == ".pfm") {
    write_pfm(path, img);
  } else {
    throw Error(ErrorCode::UnsupportedFormat,
                "cannot write '" + ext + "' files (use .png, .pgm or .pfm)");
  }
}

int cmd_enroll(const Options& opt) {
  GalleryIndex gallery;
  if (fs::exists(fs::path(opt.gallery_dir) / "manifest.txt")) {
    gallery = load_gallery_checked(opt.gallery_dir);
  } else {
    gallery = make_gallery();
  }
  ColorImage image;
  try {
    image = load_color(opt.image);
  } catch (const Error& e) {
    throw Error(e.code(), opt.image + ": " + e.what());
  }
  enroll(gallery, opt.id, opt.label.empty() ? opt.id : opt.label, image, opt.image);
  save_gallery(gallery, opt.gallery_dir);
  std::cout << "enrolled " << opt.id << " with " << gallery.records.back().features.keypoints.size()
            << " keypoints (gallery size " << gallery.records.size() << ")\n";
  return 0;
}

int cmd_query(const Options& opt) {
  const GalleryIndex gallery = load_gallery_checked(opt.gallery_dir);
  if (gallery.records.empty()) {
    throw Error(ErrorCode::EmptyGallery, "no identities enrolled in " + opt.gallery_dir);
  }
  const GrayImage query = load_query_image(gallery, opt.image);
  const std::size_t rows = opt.top > 0
                               ? std::min<std::size_t>(opt.top, gallery.records.size())
                               : gallery.records.size();

  if (opt.method == "sift" || opt.method == "both") {
    const FeatureSet features = extract_features(query, gallery.params);
    std::vector<EnrolledFeatures> enrolled;
    for (const IdentityRecord& r : gallery.records) {
      enrolled.push_back({r.identity_id, &r.features});
    }
    const std::vector<ScoredCandidate> ranked = identify(features, enrolled, opt.ratio);
    if (opt.format == "csv") {
      std::cout << "method,rank,identity,inliers,raw\n";
      for (std::size_t i = 0; i < rows; ++i) {
        std::cout << "sift," << i + 1 << "," << ranked[i].identity_id << ","
                  << ranked[i].inlier_matches << "," << ranked[i].raw_matches << "\n";
      }
    } else {
      std::cout << "sift ranking (query keypoints: " << features.keypoints.size() << ")\n";
      std::cout << "rank\tidentity\tinliers\traw\n";
      for (std::size_t i = 0; i < rows; ++i) {
        std::cout << i + 1 << "\t" << ranked[i].identity_id << "\t" << ranked[i].inlier_matches
                  << "\t" << ranked[i].raw_matches << "\n";
      }
    }
  }
  if (opt.method == "pca" || opt.method == "both") {
    if (!gallery.model.has_value()) {
      throw Error(ErrorCode::StaleEigenModel,
                  "no trained eigen model in " + opt.gallery_dir + " (run train-eigen)");
    }
    std::vector<EigenProjection> projections;
    for (std::size_t i = 0; i < gallery.records.size(); ++i) {
      projections.push_back({gallery.records[i].identity_id, gallery.projections[i]});
    }
    const std::vector<double> coeffs = project(query, *gallery.model);
    const std::vector<RankedFace> ranked = nearest_face(coeffs, projections, *gallery.model);
    if (opt.format == "csv") {
      std::cout << "method,rank,identity,distance\n";
      for (std::size_t i = 0; i < rows; ++i) {
        std::cout << "pca," << i + 1 << "," << ranked[i].identity_id << "," << ranked[i].distance
                  << "\n";
      }
    } else {
      std::cout << "pca ranking (k = " << gallery.model->k << ")\n";
      std::cout << "rank\tidentity\tdistance\n";
      for (std::size_t i = 0; i < rows; ++i) {
        std::cout << i + 1 << "\t" << ranked[i].identity_id << "\t" << ranked[i].distance << "\n";
      }
    }
  }
  return 0;
}

std::vector<QueryCase> read_query_manifest(const GalleryIndex& gallery, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open query manifest " + path.string());
  std::vector<QueryCase> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw Error(ErrorCode::FormatError, "query manifest line " + std::to_string(line_no) +
                                              " is not query_id<TAB>identity<TAB>image");
    }
    QueryCase q;
    q.query_id = line.substr(0, t1);
    q.true_identity = line.substr(t1 + 1, t2 - t1 - 1);
    fs::path image_path(line.substr(t2 + 1));
    if (image_path.is_relative()) image_path = path.parent_path() / image_path;
    q.image = load_query_image(gallery, image_path.string());
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<QueryCase> generate_queries(const GalleryIndex& gallery, const std::string& preset,
                                        std::uint64_t seed) {
  std::vector<QueryCase> queries;
  for (std::size_t i = 0; i < gallery.records.size(); ++i) {
    const IdentityRecord& r = gallery.records[i];
    const ManipulationSpec spec = ManipulationSpec::preset(preset, seed + i);
    QueryCase q;
    q.query_id = "q_" + r.identity_id;
    q.true_identity = r.identity_id;
    q.image = generate_manipulation(r.canonical, spec);
    queries.push_back(std::move(q));
  }
  return queries;
}

int cmd_bench(const Options& opt) {
  const GalleryIndex gallery = load_gallery_checked(opt.gallery_dir);
  if (gallery.records.empty()) {
    throw Error(ErrorCode::EmptyGallery, "no identities enrolled in " + opt.gallery_dir);
  }
  const std::vector<QueryCase> queries =
      opt.queries_file.empty() ? generate_queries(gallery, opt.preset, opt.seed)
                               : read_query_manifest(gallery, opt.queries_file);

  std::vector<Method> methods;
  if (opt.method == "sift" || opt.method == "both") methods.push_back(Method::Sift);
  if (opt.method == "pca" || opt.method == "both") methods.push_back(Method::Pca);

  std::vector<std::pair<std::string, double>> summary;
  for (Method method : methods) {
    const EvalReport report = run_benchmark(gallery, queries, method, opt.ratio);
    const std::string name = method == Method::Sift ? "sift" : "pca";
    if (opt.format == "csv") {
      write_report_csv(report, std::cout);
    } else {
      write_report_text(report, std::cout);
      std::cout << "\n";
    }
    if (!opt.cmc_prefix.empty()) {
      std::ofstream cmc(opt.cmc_prefix + "." + name + ".csv");
      if (!cmc) throw Error(ErrorCode::IoError, "cannot write CMC file for " + name);
      write_cmc_csv(report, cmc);
    }
    summary.emplace_back(name, report.identification_rate);
  }

  char buf[64];
  if (opt.format == "csv") {
    for (const auto& [name, rate] : summary) {
      std::snprintf(buf, sizeof(buf), "# summary,%s,%.2f\n", name.c_str(), rate);
      std::cout << buf;
    }
  } else {
    std::cout << "summary (preset " << (opt.queries_file.empty() ? opt.preset : "manifest")
              << ", seed " << opt.seed << ")\n";
    std::cout << "method\tidentification_rate\n";
    for (const auto& [name, rate] : summary) {
      std::snprintf(buf, sizeof(buf), "%s\t%.2f\n", name.c_str(), rate);
      std::cout << buf;
    }
  }
  return 0;
}

int cmd_transform(const Options& opt) {
  ManipulationSpec spec = ManipulationSpec::preset(opt.preset, opt.seed);
  if (opt.warp >= 0.0) spec.ops.push_back(ManipOp::local_warp(opt.warp, opt.warp_grid));
  if (opt.has_brightness) spec.ops.push_back(ManipOp::brightness(opt.brightness_delta));
  if (opt.contrast_gamma > 0.0) spec.ops.push_back(ManipOp::contrast(opt.contrast_gamma));
  if (opt.blur_sigma > 0.0) spec.ops.push_back(ManipOp::blur(opt.blur_sigma));
  if (opt.occlude_fraction >= 0.0) spec.ops.push_back(ManipOp::occlude(opt.occlude_fraction));
  if (opt.noise_sigma >= 0.0) spec.ops.push_back(ManipOp::noise(opt.noise_sigma));
  spec.validate();

  const GrayImage input = load_gray(opt.image);
  const GrayImage output = generate_manipulation(input, spec);
  save_by_extension(opt.output, output);
  std::cout << "seed: " << spec.seed << " (ops: " << spec.ops.size() << ")\n";
  return 0;
}

int cmd_inspect(const Options& opt) {
  const GalleryIndex gallery = load_gallery_checked(opt.gallery_dir);
  if (opt.id.empty()) {
    std::cout << "gallery " << opt.gallery_dir << ": " << gallery.records.size()
              << " identities, canonical " << gallery.canonical_width << "x"
              << gallery.canonical_height << ", eigen model "
              << (gallery.model.has_value() ? "trained" : "absent") << "\n";
    std::cout << "identity\tlabel\tkeypoints\n";
    for (const IdentityRecord& r : gallery.records) {
      std::cout << r.identity_id << "\t" << r.label << "\t" << r.features.keypoints.size() << "\n";
    }
    return 0;
  }
  const IdentityRecord* record = gallery.find(opt.id);
  if (record == nullptr) {
    throw Error(ErrorCode::UnknownIdentity, "'" + opt.id + "' is not enrolled");
  }
  std::cout << "x\ty\tsigma\torientation\n";
  char buf[128];
  for (const Keypoint& kp : record->features.keypoints) {
    std::snprintf(buf, sizeof(buf), "%.3f\t%.3f\t%.4f\t%.4f\n", kp.x, kp.y, kp.sigma,
                  kp.orientation);
    std::cout << buf;
  }
  return 0;
}

int cmd_train_eigen(const Options& opt) {
  GalleryIndex gallery = load_gallery_checked(opt.gallery_dir);
  const int n = static_cast<int>(gallery.records.size());
  const int k = opt.eigen_k > 0 ? opt.eigen_k : std::min(n - 1, 40);
  train_eigen_model(gallery, k);
  save_gallery(gallery, opt.gallery_dir);
  std::cout << "trained eigen model: k = " << k << ", dim = " << gallery.model->dim << "\n";
  return 0;
}

int cmd_mkfaces(const Options& opt) {
  fs::create_directories(opt.out_dir);
  for (int i = 0; i < opt.count; ++i) {
    const GrayImage face = synthetic_face(i, opt.size, opt.size);
    char name[32];
    std::snprintf(name, sizeof(name), "face_%03d.png", i);
    write_png_gray(fs::path(opt.out_dir) / name, face);
  }
  std::cout << "wrote " << opt.count << " synthetic faces to " << opt.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"mugmatch: face identification for manipulated facial images"};
  app.require_subcommand(1);

  const auto add_gallery = [&](CLI::App* cmd) {
    cmd->add_option("--gallery", opt.gallery_dir, "gallery directory")->required();
  };
  const auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"text", "csv"}));
  };

  CLI::App* enroll_cmd = app.add_subcommand("enroll", "enroll an image under an identity");
  add_gallery(enroll_cmd);
  enroll_cmd->add_option("--id", opt.id, "identity id")->required();
  enroll_cmd->add_option("--label", opt.label, "display label (defaults to the id)");
  enroll_cmd->add_option("image", opt.image, "image file")->required();

  CLI::App* query_cmd = app.add_subcommand("query", "identify a probe image");
  add_gallery(query_cmd);
  query_cmd->add_option("--method", opt.method, "sift, pca or both")
      ->check(CLI::IsMember({"sift", "pca", "both"}));
  query_cmd->add_option("--ratio", opt.ratio, "ratio test fraction in (0, 1]")
      ->check(CLI::Range(1e-9, 1.0));
  query_cmd->add_option("--top", opt.top, "number of rows to print (0 = all)");
  add_format(query_cmd);
  query_cmd->add_option("image", opt.image, "probe image file")->required();

  CLI::App* bench_cmd = app.add_subcommand("bench", "run an identification benchmark");
  add_gallery(bench_cmd);
  bench_cmd->add_option("--method", opt.method, "sift, pca or both")
      ->check(CLI::IsMember({"sift", "pca", "both"}));
  bench_cmd->add_option("--ratio", opt.ratio, "ratio test fraction in (0, 1]")
      ->check(CLI::Range(1e-9, 1.0));
  bench_cmd->add_option("--preset", opt.preset, "manipulation preset for generated queries")
      ->check(CLI::IsMember({"none", "mild", "moderate", "heavy"}));
  bench_cmd->add_option("--seed", opt.seed, "base seed for generated queries");
  bench_cmd->add_option("--queries", opt.queries_file,
                        "query manifest (query_id<TAB>identity<TAB>image per line) instead of "
                        "generated queries");
  bench_cmd->add_option("--cmc-out", opt.cmc_prefix,
                        "write CMC curves to <prefix>.<method>.csv");
  add_format(bench_cmd);

  CLI::App* transform_cmd =
      app.add_subcommand("transform", "apply a seeded manipulation to an image");
  transform_cmd->add_option("--preset", opt.preset, "manipulation preset")
      ->check(CLI::IsMember({"none", "mild", "moderate", "heavy"}));
  transform_cmd->add_option("--seed", opt.seed, "manipulation seed");
  transform_cmd->add_option("--warp", opt.warp, "local warp amplitude in pixels");
  transform_cmd->add_option("--warp-grid", opt.warp_grid, "local warp control grid size");
  transform_cmd->add_option("--brightness", opt.brightness_delta, "additive brightness offset");
  transform_cmd->add_option("--contrast", opt.contrast_gamma, "contrast gamma");
  transform_cmd->add_option("--blur", opt.blur_sigma, "Gaussian blur sigma");
  transform_cmd->add_option("--occlude", opt.occlude_fraction, "occluded area fraction");
  transform_cmd->add_option("--noise", opt.noise_sigma, "additive Gaussian noise sigma");
  transform_cmd->add_option("input", opt.image, "input image")->required();
  transform_cmd->add_option("output", opt.output, "output image (.png, .pgm or .pfm)")->required();

  CLI::App* inspect_cmd = app.add_subcommand("inspect", "show gallery contents or keypoints");
  add_gallery(inspect_cmd);
  inspect_cmd->add_option("--id", opt.id, "dump keypoints for this identity");

  CLI::App* train_cmd = app.add_subcommand("train-eigen", "train and persist the eigen model");
  add_gallery(train_cmd);
  train_cmd->add_option("--eigen-k", opt.eigen_k, "retained components (default min(N-1, 40))");

  CLI::App* mkfaces_cmd =
      app.add_subcommand("mkfaces", "generate a synthetic frontal-face corpus");
  mkfaces_cmd->add_option("--out", opt.out_dir, "output directory")->required();
  mkfaces_cmd->add_option("--count", opt.count, "number of faces");
  mkfaces_cmd->add_option("--size", opt.size, "image side length");

  transform_cmd->callback([&] { opt.has_brightness = transform_cmd->count("--brightness") > 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (enroll_cmd->parsed()) return cmd_enroll(opt);
    if (query_cmd->parsed()) return cmd_query(opt);
    if (bench_cmd->parsed()) return cmd_bench(opt);
    if (transform_cmd->parsed()) return cmd_transform(opt);
    if (inspect_cmd->parsed()) return cmd_inspect(opt);
    if (train_cmd->parsed()) return cmd_train_eigen(opt);
    if (mkfaces_cmd->parsed()) return cmd_mkfaces(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

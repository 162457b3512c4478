#include "mugmatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {

/* Deterministic random stream: the mt19937_64 sequence is pinned by the
 * standard, and the mappings below avoid std::uniform_real_distribution and
 * friends, whose output is implementation defined. */
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform01() * span);
    return std::min(v, hi);
  }

  double normal(double sigma) {  // Box-Muller, cosine branch
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace

ManipOp ManipOp::local_warp(double amplitude, int grid) {
  return {ManipOpKind::LocalWarp, amplitude, static_cast<double>(grid)};
}
ManipOp ManipOp::brightness(double delta) { return {ManipOpKind::Brightness, delta, 0.0}; }
ManipOp ManipOp::contrast(double gamma) { return {ManipOpKind::Contrast, gamma, 0.0}; }
ManipOp ManipOp::blur(double sigma) { return {ManipOpKind::Blur, sigma, 0.0}; }
ManipOp ManipOp::occlude(double fraction) { return {ManipOpKind::Occlude, fraction, 0.0}; }
ManipOp ManipOp::noise(double sigma) { return {ManipOpKind::Noise, sigma, 0.0}; }

void ManipulationSpec::validate() const {
  for (const ManipOp& op : ops) {
    switch (op.kind) {
      case ManipOpKind::LocalWarp:
        if (op.a < 0.0 || op.a > 15.0) {
          throw Error(ErrorCode::SpecOutOfRange, "warp amplitude must be in [0, 15]");
        }
        if (op.b < 2.0 || op.b > 32.0 || op.b != std::floor(op.b)) {
          throw Error(ErrorCode::SpecOutOfRange, "warp grid must be an integer in [2, 32]");
        }
        break;
      case ManipOpKind::Brightness:
        if (op.a < -1.0 || op.a > 1.0) {
          throw Error(ErrorCode::SpecOutOfRange, "brightness offset must be in [-1, 1]");
        }
        break;
      case ManipOpKind::Contrast:
        if (!(op.a > 0.0) || op.a > 16.0) {
          throw Error(ErrorCode::SpecOutOfRange, "contrast gamma must be in (0, 16]");
        }
        break;
      case ManipOpKind::Blur:
        if (!(op.a > 0.0) || op.a > 16.0) {
          throw Error(ErrorCode::SpecOutOfRange, "blur sigma must be in (0, 16]");
        }
        break;
      case ManipOpKind::Occlude:
        if (op.a < 0.0 || op.a > 0.25) {
          throw Error(ErrorCode::SpecOutOfRange, "occluded fraction must be in [0, 0.25]");
        }
        break;
      case ManipOpKind::Noise:
        if (op.a < 0.0 || op.a > 1.0) {
          throw Error(ErrorCode::SpecOutOfRange, "noise sigma must be in [0, 1]");
        }
        break;
    }
  }
}

ManipulationSpec ManipulationSpec::preset(std::string_view name, std::uint64_t seed) {
  ManipulationSpec spec;
  spec.seed = seed;
  if (name == "none") {
    return spec;
  }
  if (name == "mild") {
    spec.ops = {ManipOp::local_warp(4.0, 4), ManipOp::brightness(0.05), ManipOp::noise(0.01)};
    return spec;
  }
  if (name == "moderate") {
    spec.ops = {ManipOp::local_warp(8.0, 4), ManipOp::contrast(1.25), ManipOp::blur(1.0),
                ManipOp::occlude(0.05), ManipOp::noise(0.02)};
    return spec;
  }
  if (name == "heavy") {
    spec.ops = {ManipOp::local_warp(13.0, 5), ManipOp::contrast(1.5), ManipOp::blur(1.8),
                ManipOp::occlude(0.16), ManipOp::noise(0.05)};
    return spec;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "'");
}

namespace {

float sample_clamped(const GrayImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double v = (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                   fy * ((1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
  return static_cast<float>(v);
}

GrayImage apply_local_warp(const GrayImage& img, double amplitude, int n, Rng& rng) {
  std::vector<double> dxs(static_cast<std::size_t>(n) * n);
  std::vector<double> dys(dxs.size());
  for (std::size_t i = 0; i < dxs.size(); ++i) {
    dxs[i] = rng.uniform(-amplitude, amplitude);
    dys[i] = rng.uniform(-amplitude, amplitude);
  }

  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const double v = img.height > 1 ? static_cast<double>(y) / (img.height - 1) * (n - 1) : 0.0;
    const int j0 = std::min(static_cast<int>(v), n - 2);
    const double fv = v - j0;
    for (int x = 0; x < img.width; ++x) {
      const double u = img.width > 1 ? static_cast<double>(x) / (img.width - 1) * (n - 1) : 0.0;
      const int i0 = std::min(static_cast<int>(u), n - 2);
      const double fu = u - i0;
      const auto ctrl = [&](const std::vector<double>& d, int i, int j) {
        return d[static_cast<std::size_t>(j) * n + i];
      };
      const double dx = (1.0 - fv) * ((1.0 - fu) * ctrl(dxs, i0, j0) + fu * ctrl(dxs, i0 + 1, j0)) +
                        fv * ((1.0 - fu) * ctrl(dxs, i0, j0 + 1) + fu * ctrl(dxs, i0 + 1, j0 + 1));
      const double dy = (1.0 - fv) * ((1.0 - fu) * ctrl(dys, i0, j0) + fu * ctrl(dys, i0 + 1, j0)) +
                        fv * ((1.0 - fu) * ctrl(dys, i0, j0 + 1) + fu * ctrl(dys, i0 + 1, j0 + 1));
      out.at(x, y) = sample_clamped(img, x + dx, y + dy);
    }
  }
  return out;
}

GrayImage apply_op(const GrayImage& img, const ManipOp& op, Rng& rng) {
  switch (op.kind) {
    case ManipOpKind::LocalWarp:
      return apply_local_warp(img, op.a, static_cast<int>(op.b), rng);
    case ManipOpKind::Brightness: {
      GrayImage out = img;
      for (float& p : out.pixels) {
        p = std::clamp(static_cast<float>(p + op.a), 0.0f, 1.0f);
      }
      return out;
    }
    case ManipOpKind::Contrast: {
      GrayImage out = img;
      for (float& p : out.pixels) {
        p = static_cast<float>(std::pow(static_cast<double>(p), op.a));
      }
      return out;
    }
    case ManipOpKind::Blur: {
      GrayImage out = gaussian_blur(img, op.a);
      for (float& p : out.pixels) p = std::clamp(p, 0.0f, 1.0f);
      return out;
    }
    case ManipOpKind::Occlude: {
      GrayImage out = img;
      const int side_w = std::clamp(
          static_cast<int>(std::lround(img.width * std::sqrt(op.a))), 0, img.width);
      const int side_h = std::clamp(
          static_cast<int>(std::lround(img.height * std::sqrt(op.a))), 0, img.height);
      if (side_w > 0 && side_h > 0) {
        const int x0 = rng.uniform_int(0, img.width - side_w);
        const int y0 = rng.uniform_int(0, img.height - side_h);
        const float fill = static_cast<float>(rng.uniform01());
        for (int y = y0; y < y0 + side_h; ++y) {
          for (int x = x0; x < x0 + side_w; ++x) {
            out.at(x, y) = fill;
          }
        }
      }
      return out;
    }
    case ManipOpKind::Noise: {
      GrayImage out = img;
      if (op.a > 0.0) {
        for (float& p : out.pixels) {
          p = std::clamp(static_cast<float>(p + rng.normal(op.a)), 0.0f, 1.0f);
        }
      }
      return out;
    }
  }
  return img;
}

}  // namespace

GrayImage generate_manipulation(const GrayImage& img, const ManipulationSpec& spec) {
  spec.validate();
  if (img.width < 1 || img.height < 1) {
    throw Error(ErrorCode::ZeroDimension, "manipulation source is empty");
  }
  GrayImage out = img;
  if (spec.ops.empty()) return out;

  Rng rng(spec.seed);
  for (const ManipOp& op : spec.ops) {
    out = apply_op(out, op, rng);
  }
  return out;
}

double identification_rate(const std::vector<bool>& rank1_outcomes) {
  if (rank1_outcomes.empty()) {
    throw Error(ErrorCode::EmptyOutcomes, "no outcomes to score");
  }
  const std::size_t correct =
      static_cast<std::size_t>(std::count(rank1_outcomes.begin(), rank1_outcomes.end(), true));
  return 100.0 * static_cast<double>(correct) / static_cast<double>(rank1_outcomes.size());
}

std::vector<double> cmc_curve(const std::vector<int>& ranks, int max_rank) {
  if (ranks.empty()) {
    throw Error(ErrorCode::EmptyOutcomes, "no ranks to score");
  }
  if (max_rank < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_rank must be >= 1");
  }
  for (int r : ranks) {
    if (r < 1) throw Error(ErrorCode::InvalidArgument, "ranks are 1-based");
  }
  std::vector<double> curve(max_rank, 0.0);
  for (int k = 1; k <= max_rank; ++k) {
    std::size_t hits = 0;
    for (int r : ranks) {
      if (r <= k) ++hits;
    }
    curve[k - 1] = 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return curve;
}

EvalReport run_benchmark(const GalleryIndex& gallery, const std::vector<QueryCase>& queries,
                         Method method, double fraction, const AlrParams& alr) {
  if (gallery.records.empty()) {
    throw Error(ErrorCode::EmptyGallery, "gallery has no enrolled identities");
  }
  if (queries.empty()) {
    throw Error(ErrorCode::EmptyOutcomes, "no queries to run");
  }
  for (const QueryCase& q : queries) {
    if (gallery.find(q.true_identity) == nullptr) {
      throw Error(ErrorCode::UnknownIdentity, "'" + q.true_identity + "' is not enrolled");
    }
  }
  if (method == Method::Pca && !gallery.model.has_value()) {
    throw Error(ErrorCode::StaleEigenModel, "train an eigen model before running a PCA benchmark");
  }

  std::vector<EnrolledFeatures> enrolled;
  std::vector<EigenProjection> eigens;
  if (method == Method::Sift) {
    enrolled.reserve(gallery.records.size());
    for (const IdentityRecord& r : gallery.records) {
      enrolled.push_back({r.identity_id, &r.features});
    }
  } else {
    eigens.reserve(gallery.records.size());
    for (std::size_t i = 0; i < gallery.records.size(); ++i) {
      eigens.push_back({gallery.records[i].identity_id, gallery.projections[i]});
    }
  }

  EvalReport report;
  report.method = method;
  std::vector<int> ranks;
  std::vector<bool> outcomes;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const QueryCase& q = queries[qi];
    PerQueryResult result;
    result.query_id = q.query_id.empty() ? "q" + std::to_string(qi) : q.query_id;
    result.true_identity = q.true_identity;

    if (method == Method::Sift) {
      const FeatureSet features = extract_features(q.image, gallery.params);
      const std::vector<ScoredCandidate> ranked = identify(features, enrolled, fraction, alr);
      result.top_identity = ranked.front().identity_id;
      result.top_score = ranked.front().inlier_matches;
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].identity_id == q.true_identity) {
          result.rank = static_cast<int>(i) + 1;
          break;
        }
      }
    } else {
      const std::vector<double> coeffs = project(q.image, *gallery.model);
      const std::vector<RankedFace> ranked = nearest_face(coeffs, eigens, *gallery.model);
      result.top_identity = ranked.front().identity_id;
      result.top_score = ranked.front().distance;
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].identity_id == q.true_identity) {
          result.rank = static_cast<int>(i) + 1;
          break;
        }
      }
    }

    ranks.push_back(result.rank);
    outcomes.push_back(result.rank == 1);
    report.per_query.push_back(std::move(result));
  }

  report.identification_rate = identification_rate(outcomes);
  report.cmc = cmc_curve(ranks, static_cast<int>(gallery.records.size()));
  return report;
}

namespace {
const char* method_name(Method m) { return m == Method::Sift ? "sift" : "pca"; }
}

void write_report_text(const EvalReport& report, std::ostream& out) {
  out << "method: " << method_name(report.method) << "\n";
  out << "queries: " << report.per_query.size() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", report.identification_rate);
  out << "identification rate: " << buf << "\n";
  out << "cmc:";
  const std::size_t shown = std::min<std::size_t>(report.cmc.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) {
    std::snprintf(buf, sizeof(buf), " %zu:%.2f", k + 1, report.cmc[k]);
    out << buf;
  }
  if (shown < report.cmc.size()) out << " ...";
  out << "\n\n";
  out << "query_id\ttrue\ttop\trank\tscore\n";
  for (const PerQueryResult& r : report.per_query) {
    std::snprintf(buf, sizeof(buf), "%.4g", r.top_score);
    out << r.query_id << "\t" << r.true_identity << "\t" << r.top_identity << "\t" << r.rank
        << "\t" << buf << "\n";
  }
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "query_id,true_identity,rank,top1_id,top1_score\n";
  char buf[64];
  for (const PerQueryResult& r : report.per_query) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.top_score);
    out << r.query_id << "," << r.true_identity << "," << r.rank << "," << r.top_identity << ","
        << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.4f", report.identification_rate);
  out << "# method," << method_name(report.method) << "\n";
  out << "# identification_rate," << buf << "\n";
}

void write_cmc_csv(const EvalReport& report, std::ostream& out) {
  out << "rank,rate\n";
  char buf[64];
  for (std::size_t k = 0; k < report.cmc.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.4f\n", k + 1, report.cmc[k]);
    out << buf;
  }
}

}  // namespace mugmatch

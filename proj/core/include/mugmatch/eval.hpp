#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mugmatch/gallery.hpp"
#include "mugmatch/image.hpp"
#include "mugmatch/matching.hpp"

namespace mugmatch {

enum class ManipOpKind { LocalWarp, Brightness, Contrast, Blur, Occlude, Noise };

/* One image manipulation.  Interpretation of a/b per kind:
 *   LocalWarp   a = max displacement in pixels (<= 15), b = control grid size
 *   Brightness  a = additive offset in [-1, 1]
 *   Contrast    a = gamma exponent (> 0)
 *   Blur        a = Gaussian sigma (> 0)
 *   Occlude     a = covered area fraction in [0, 0.25]
 *   Noise       a = Gaussian sigma of additive noise (>= 0) */
struct ManipOp {
  ManipOpKind kind = ManipOpKind::Brightness;
  double a = 0.0;
  double b = 0.0;

  static ManipOp local_warp(double amplitude, int grid);
  static ManipOp brightness(double delta);
  static ManipOp contrast(double gamma);
  static ManipOp blur(double sigma);
  static ManipOp occlude(double fraction);
  static ManipOp noise(double sigma);
};

struct ManipulationSpec {
  std::uint64_t seed = 0;
  std::vector<ManipOp> ops;  // applied in order

  /* Presets none / mild / moderate / heavy; InvalidArgument otherwise. */
  static ManipulationSpec preset(std::string_view name, std::uint64_t seed);

  void validate() const;  // SpecOutOfRange on out of range parameters
};

/* Applies the ops in order with one deterministic RNG stream seeded from
 * spec.seed.  An empty op list returns the input bit for bit.  Output stays
 * in [0, 1]. */
GrayImage generate_manipulation(const GrayImage& img, const ManipulationSpec& spec);

/* 100 * correct / total.  Throws EmptyOutcomes. */
double identification_rate(const std::vector<bool>& rank1_outcomes);

/* cmc[k-1] = percentage of queries whose true identity appears at rank <= k.
 * Monotone non decreasing; ranks are 1-based.  Throws EmptyOutcomes. */
std::vector<double> cmc_curve(const std::vector<int>& ranks, int max_rank);

enum class Method { Sift, Pca };

struct QueryCase {
  std::string query_id;
  std::string true_identity;
  GrayImage image;  // canonical size grayscale
};

struct PerQueryResult {
  std::string query_id;
  std::string true_identity;
  std::string top_identity;
  double top_score = 0.0;  // inlier count for SIFT, distance for PCA
  int rank = 0;            // 1-based rank of the true identity
};

struct EvalReport {
  Method method = Method::Sift;
  std::vector<PerQueryResult> per_query;
  double identification_rate = 0.0;  // equals cmc[0]
  std::vector<double> cmc;           // ranks 1 .. gallery size
};

/* Runs every query against the gallery.  Each true_identity must be enrolled
 * (UnknownIdentity); Method::Pca requires a trained model (StaleEigenModel).
 * Throws EmptyGallery / EmptyOutcomes on empty inputs. */
EvalReport run_benchmark(const GalleryIndex& gallery, const std::vector<QueryCase>& queries,
                         Method method, double fraction = 0.8, const AlrParams& alr = {});

void write_report_text(const EvalReport& report, std::ostream& out);

/* Columns: query_id, true_identity, rank, top1_id, top1_score; summary lines
 * follow as '#' comments. */
void write_report_csv(const EvalReport& report, std::ostream& out);

/* rank,rate pairs, one per line. */
void write_cmc_csv(const EvalReport& report, std::ostream& out);

}  // namespace mugmatch

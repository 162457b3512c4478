#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mugmatch/sift.hpp"

namespace mugmatch {

struct MatchPair {
  int query_index = 0;
  int gallery_index = 0;
  double dist_best = 0.0;
  double dist_second = 0.0;  // >= dist_best; +inf when no second candidate
};

struct NearestTwo {
  int best_index = -1;
  double dist_best = 0.0;
  double dist_second = 0.0;
};

/* Euclidean distances accumulated in double over the float components,
 * scanned in index order with first-wins ties.  dist_second is +inf for a one
 * element set.  Throws EmptyFeatureSet. */
NearestTwo nearest_two(const Descriptor& query, const FeatureSet& gallery);

/* Lowe ratio test, strict dist_best < fraction * dist_second, followed by a
 * one-to-one pruning that keeps the smallest dist_best per gallery keypoint
 * (query index breaks ties).  Empty inputs give an empty result.  fraction
 * must lie in (0, 1]; otherwise InvalidArgument. */
std::vector<MatchPair> ratio_match(const FeatureSet& query, const FeatureSet& gallery,
                                   double fraction = 0.8);

struct AlrParams {
  int ratio_bins = 20;       // log scale bins for pairwise length ratios
  double ratio_min = 0.25;
  double ratio_max = 4.0;
  int angle_bins = 24;       // bins for pairwise angle differences over [-pi, pi)
  int inlier_band = 1;       // accepted distance from the dominant cell
  double min_pair_votes = 0.5;  // fraction of a match's pairs that must agree

  void validate() const;  // InvalidArgument on nonsense values
};

/* One vote per match pair: the segment between two query keypoints and the
 * segment between their gallery partners give a length ratio (log scale bins)
 * and an angle difference (bins centred on multiples of the bin width).
 * Exposed so tests can check the histogram directly. */
struct AlrVotes {
  int ratio_bins = 0;
  int angle_bins = 0;
  std::vector<double> histogram;      // ratio_bins * angle_bins, row = ratio bin
  int dominant_ratio_bin = -1;
  int dominant_angle_bin = -1;
  /* per match: [0] pairs voting inside the inlier band, [1] valid pairs */
  std::vector<std::array<int, 2>> per_match;

  double cell(int r, int a) const {
    return histogram[static_cast<std::size_t>(r) * angle_bins + a];
  }
};

AlrVotes compute_alr_votes(const std::vector<MatchPair>& matches, const FeatureSet& query,
                           const FeatureSet& gallery, const AlrParams& params = {});

/* Keeps the matches whose pairwise votes agree with the dominant cell for at
 * least min_pair_votes of their valid pairs.  Fewer than two matches pass
 * through unchanged. */
std::vector<MatchPair> alr_filter(const std::vector<MatchPair>& matches, const FeatureSet& query,
                                  const FeatureSet& gallery, const AlrParams& params = {});

struct ScoredCandidate {
  std::string identity_id;
  int raw_matches = 0;     // after the ratio test
  int inlier_matches = 0;  // after spatial verification
  std::vector<MatchPair> inlier_pairs;
};

ScoredCandidate score_candidate(const FeatureSet& query, const FeatureSet& gallery,
                                const std::string& identity_id, double fraction = 0.8,
                                const AlrParams& params = {});

struct EnrolledFeatures {
  std::string identity_id;
  const FeatureSet* features = nullptr;
};

/* Scores the query against every gallery entry and sorts by inlier count,
 * then raw count, both descending; ties keep enrollment order.  Throws
 * EmptyGallery. */
std::vector<ScoredCandidate> identify(const FeatureSet& query,
                                      std::span<const EnrolledFeatures> gallery,
                                      double fraction = 0.8, const AlrParams& params = {});

}  // namespace mugmatch

#include "mugmatch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_pm_pi(double theta) {
  while (theta < -kPi) theta += 2.0 * kPi;
  while (theta >= kPi) theta -= 2.0 * kPi;
  return theta;
}
}  // namespace

NearestTwo nearest_two(const Descriptor& query, const FeatureSet& gallery) {
  if (gallery.descriptors.empty()) {
    throw Error(ErrorCode::EmptyFeatureSet, "gallery feature set is empty");
  }

  NearestTwo result{-1, kInf, kInf};
  for (std::size_t i = 0; i < gallery.descriptors.size(); ++i) {
    const Descriptor& cand = gallery.descriptors[i];
    double acc = 0.0;
    bool abandoned = false;
    for (int d = 0; d < 128; ++d) {
      const double diff = static_cast<double>(query.values[d]) - cand.values[d];
      acc += diff * diff;
      if (acc >= result.dist_second * result.dist_second) {
        abandoned = true;
        break;
      }
    }
    if (abandoned) continue;
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

std::vector<MatchPair> ratio_match(const FeatureSet& query, const FeatureSet& gallery,
                                   double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error(ErrorCode::InvalidArgument,
                "ratio fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  if (query.descriptors.empty() || gallery.descriptors.empty()) {
    return {};
  }

  std::vector<MatchPair> accepted;
  for (std::size_t q = 0; q < query.descriptors.size(); ++q) {
    const NearestTwo nn = nearest_two(query.descriptors[q], gallery);
    if (nn.best_index < 0) continue;
    if (nn.dist_best < fraction * nn.dist_second) {
      accepted.push_back({static_cast<int>(q), nn.best_index, nn.dist_best, nn.dist_second});
    }
  }

  /* One-to-one: when several query keypoints claim the same gallery keypoint
   * only the closest claim survives. */
  std::vector<std::size_t> order(accepted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (accepted[a].dist_best != accepted[b].dist_best) {
      return accepted[a].dist_best < accepted[b].dist_best;
    }
    return accepted[a].query_index < accepted[b].query_index;
  });

  std::vector<char> taken(gallery.descriptors.size(), 0);
  std::vector<char> keep(accepted.size(), 0);
  for (std::size_t i : order) {
    const int g = accepted[i].gallery_index;
    if (taken[g]) continue;
    taken[g] = 1;
    keep[i] = 1;
  }

  std::vector<MatchPair> out;
  out.reserve(accepted.size());
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (keep[i]) out.push_back(accepted[i]);
  }
  return out;
}

void AlrParams::validate() const {
  if (ratio_bins < 1 || angle_bins < 1) {
    throw Error(ErrorCode::InvalidArgument, "alr bin counts must be >= 1");
  }
  if (!(ratio_min > 0.0) || !(ratio_max > ratio_min)) {
    throw Error(ErrorCode::InvalidArgument, "alr ratio range must satisfy 0 < min < max");
  }
  if (inlier_band < 0) {
    throw Error(ErrorCode::InvalidArgument, "alr inlier_band must be >= 0");
  }
  if (min_pair_votes < 0.0 || min_pair_votes > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "alr min_pair_votes must be in [0, 1]");
  }
}

namespace {

int circular_distance(int a, int b, int n) {
  const int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

struct PairVote {
  int ratio_bin = -1;
  int angle_bin = -1;
  bool valid = false;
};

PairVote vote_for_pair(const Keypoint& qa, const Keypoint& qb, const Keypoint& ga,
                       const Keypoint& gb, const AlrParams& p) {
  PairVote v;
  const double qdx = static_cast<double>(qb.x) - qa.x;
  const double qdy = static_cast<double>(qb.y) - qa.y;
  const double gdx = static_cast<double>(gb.x) - ga.x;
  const double gdy = static_cast<double>(gb.y) - ga.y;
  const double qlen = std::sqrt(qdx * qdx + qdy * qdy);
  const double glen = std::sqrt(gdx * gdx + gdy * gdy);
  if (glen < 1e-9 || qlen < 1e-9) return v;  // coincident keypoints carry no geometry

  const double ratio = qlen / glen;
  const double log_lo = std::log(p.ratio_min);
  const double log_hi = std::log(p.ratio_max);
  int rbin = static_cast<int>(
      std::floor((std::log(ratio) - log_lo) / (log_hi - log_lo) * p.ratio_bins));
  rbin = std::clamp(rbin, 0, p.ratio_bins - 1);

  const double delta = wrap_pm_pi(std::atan2(qdy, qdx) - std::atan2(gdy, gdx));
  /* Bins centred on multiples of the bin width so that 0 and other exact
   * multiples land mid-bin instead of on an edge. */
  const double width = 2.0 * kPi / p.angle_bins;
  const int abin = static_cast<int>(std::llround((delta + kPi) / width)) % p.angle_bins;

  v.ratio_bin = rbin;
  v.angle_bin = abin;
  v.valid = true;
  return v;
}

}  // namespace

AlrVotes compute_alr_votes(const std::vector<MatchPair>& matches, const FeatureSet& query,
                           const FeatureSet& gallery, const AlrParams& params) {
  params.validate();
  AlrVotes votes;
  votes.ratio_bins = params.ratio_bins;
  votes.angle_bins = params.angle_bins;
  votes.histogram.assign(static_cast<std::size_t>(params.ratio_bins) * params.angle_bins, 0.0);
  votes.per_match.assign(matches.size(), {0, 0});

  const std::size_t n = matches.size();
  if (n < 2) return votes;

  std::vector<PairVote> pair_votes(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const PairVote v = vote_for_pair(query.keypoints[matches[i].query_index],
                                       query.keypoints[matches[j].query_index],
                                       gallery.keypoints[matches[i].gallery_index],
                                       gallery.keypoints[matches[j].gallery_index], params);
      pair_votes[i * n + j] = v;
      if (v.valid) {
        votes.histogram[static_cast<std::size_t>(v.ratio_bin) * params.angle_bins + v.angle_bin] +=
            1.0;
      }
    }
  }

  double best = -1.0;
  for (int r = 0; r < params.ratio_bins; ++r) {
    for (int a = 0; a < params.angle_bins; ++a) {
      const double v = votes.histogram[static_cast<std::size_t>(r) * params.angle_bins + a];
      if (v > best) {
        best = v;
        votes.dominant_ratio_bin = r;
        votes.dominant_angle_bin = a;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const PairVote& v = pair_votes[i * n + j];
      if (!v.valid) continue;
      votes.per_match[i][1] += 1;
      votes.per_match[j][1] += 1;
      const bool inlier =
          std::abs(v.ratio_bin - votes.dominant_ratio_bin) <= params.inlier_band &&
          circular_distance(v.angle_bin, votes.dominant_angle_bin, params.angle_bins) <=
              params.inlier_band;
      if (inlier) {
        votes.per_match[i][0] += 1;
        votes.per_match[j][0] += 1;
      }
    }
  }
  return votes;
}

std::vector<MatchPair> alr_filter(const std::vector<MatchPair>& matches, const FeatureSet& query,
                                  const FeatureSet& gallery, const AlrParams& params) {
  params.validate();
  if (matches.size() < 2) return matches;

  const AlrVotes votes = compute_alr_votes(matches, query, gallery, params);
  std::vector<MatchPair> out;
  out.reserve(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const int agree = votes.per_match[i][0];
    const int valid = votes.per_match[i][1];
    if (valid == 0) continue;
    if (static_cast<double>(agree) >= params.min_pair_votes * valid) {
      out.push_back(matches[i]);
    }
  }
  return out;
}

ScoredCandidate score_candidate(const FeatureSet& query, const FeatureSet& gallery,
                                const std::string& identity_id, double fraction,
                                const AlrParams& params) {
  ScoredCandidate scored;
  scored.identity_id = identity_id;
  const std::vector<MatchPair> raw = ratio_match(query, gallery, fraction);
  scored.raw_matches = static_cast<int>(raw.size());
  scored.inlier_pairs = alr_filter(raw, query, gallery, params);
  scored.inlier_matches = static_cast<int>(scored.inlier_pairs.size());
  return scored;
}

std::vector<ScoredCandidate> identify(const FeatureSet& query,
                                      std::span<const EnrolledFeatures> gallery, double fraction,
                                      const AlrParams& params) {
  if (gallery.empty()) {
    throw Error(ErrorCode::EmptyGallery, "no enrolled identities");
  }
  std::vector<ScoredCandidate> out;
  out.reserve(gallery.size());
  for (const EnrolledFeatures& entry : gallery) {
    out.push_back(score_candidate(query, *entry.features, entry.identity_id, fraction, params));
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.inlier_matches != b.inlier_matches) return a.inlier_matches > b.inlier_matches;
    return a.raw_matches > b.raw_matches;
  });
  return out;
}

}  // namespace mugmatch

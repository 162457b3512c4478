#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "mugmatch/errors.hpp"
#include "mugmatch/matching.hpp"
#include "mugmatch/sift.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mugmatch;

namespace {

FeatureSet features_at(const std::vector<std::pair<float, float>>& positions,
                       std::uint64_t descriptor_seed) {
  FeatureSet fs;
  fs.source_width = 300;
  fs.source_height = 300;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    fs.keypoints.push_back(fixtures::make_keypoint(positions[i].first, positions[i].second));
    fs.descriptors.push_back(fixtures::random_descriptor(descriptor_seed + i));
  }
  return fs;
}

std::vector<MatchPair> identity_matches(std::size_t count) {
  std::vector<MatchPair> matches;
  for (std::size_t i = 0; i < count; ++i) {
    matches.push_back({static_cast<int>(i), static_cast<int>(i), 0.1, 0.9});
  }
  return matches;
}

std::set<std::pair<int, int>> as_pairs(const std::vector<MatchPair>& matches) {
  std::set<std::pair<int, int>> out;
  for (const MatchPair& m : matches) out.insert({m.query_index, m.gallery_index});
  return out;
}

Descriptor basis_descriptor(int axis, float value) {
  Descriptor d{};
  d.values[axis] = value;
  return d;
}

const std::vector<std::pair<float, float>> kSpread = {
    {20.0f, 30.0f},  {250.0f, 40.0f},  {60.0f, 200.0f}, {180.0f, 120.0f},
    {100.0f, 70.0f}, {230.0f, 250.0f}, {40.0f, 260.0f}, {140.0f, 180.0f},
};

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("nearest_two equals an exhaustive scan on random 50 descriptor sets") {
  FeatureSet gallery;
  for (int i = 0; i < 50; ++i) {
    gallery.descriptors.push_back(fixtures::random_descriptor(1000 + i));
    gallery.keypoints.push_back(fixtures::make_keypoint(static_cast<float>(i), 0.0f));
  }
  for (int q = 0; q < 20; ++q) {
    const Descriptor query = fixtures::random_descriptor(9000 + q);
    const NearestTwo got = nearest_two(query, gallery);
    const oracle::NearestTwoResult want = oracle::nearest_two_scan(query, gallery.descriptors);
    CAPTURE(q);
    CHECK(got.best_index == want.best_index);
    CHECK(got.dist_best == want.dist_best);
    CHECK(got.dist_second == want.dist_second);
  }
}

TEST_CASE("nearest_two handles duplicates and singletons") {
  FeatureSet gallery;
  gallery.descriptors.push_back(fixtures::random_descriptor(5));
  gallery.keypoints.push_back(fixtures::make_keypoint(0.0f, 0.0f));

  const NearestTwo single = nearest_two(gallery.descriptors[0], gallery);
  CHECK(single.best_index == 0);
  CHECK(single.dist_best == 0.0);
  CHECK(std::isinf(single.dist_second));

  // A duplicate of the best: first index wins, second distance is zero.
  gallery.descriptors.push_back(gallery.descriptors[0]);
  gallery.keypoints.push_back(fixtures::make_keypoint(1.0f, 0.0f));
  const NearestTwo dup = nearest_two(gallery.descriptors[0], gallery);
  CHECK(dup.best_index == 0);
  CHECK(dup.dist_best == 0.0);
  CHECK(dup.dist_second == 0.0);

  CHECK_THROWS_AS(nearest_two(gallery.descriptors[0], FeatureSet{}), Error);
}

TEST_CASE("ratio test uses a strict inequality") {
  FeatureSet gallery;
  gallery.descriptors.push_back(basis_descriptor(0, 1.0f));  // distance 1 from zero query
  gallery.descriptors.push_back(basis_descriptor(1, 2.0f));  // distance 2
  gallery.keypoints.push_back(fixtures::make_keypoint(0.0f, 0.0f));
  gallery.keypoints.push_back(fixtures::make_keypoint(50.0f, 0.0f));

  FeatureSet query;
  query.descriptors.push_back(Descriptor{});  // all zeros
  query.keypoints.push_back(fixtures::make_keypoint(0.0f, 0.0f));

  // 1.0 < 0.5 * 2.0 is false: the boundary case must be rejected.
  CHECK(ratio_match(query, gallery, 0.5).empty());
  // A slightly looser fraction accepts it.
  const auto loose = ratio_match(query, gallery, 0.75);
  REQUIRE(loose.size() == 1);
  CHECK(loose[0].query_index == 0);
  CHECK(loose[0].gallery_index == 0);
  CHECK(loose[0].dist_best == doctest::Approx(1.0));
  CHECK(loose[0].dist_second == doctest::Approx(2.0));
}

TEST_CASE("ratio test validates the fraction") {
  const FeatureSet fs = features_at({{0.0f, 0.0f}}, 31);
  CHECK_THROWS_AS(ratio_match(fs, fs, 0.0), Error);
  CHECK_THROWS_AS(ratio_match(fs, fs, -0.1), Error);
  CHECK_THROWS_AS(ratio_match(fs, fs, 1.5), Error);
  CHECK_NOTHROW(ratio_match(fs, fs, 1.0));
}

TEST_CASE("ratio test on empty inputs returns no matches") {
  const FeatureSet fs = features_at({{0.0f, 0.0f}}, 32);
  CHECK(ratio_match(FeatureSet{}, fs).empty());
  CHECK(ratio_match(fs, FeatureSet{}).empty());
}

TEST_CASE("one-to-one pruning keeps the closest claim") {
  FeatureSet gallery;
  gallery.descriptors.push_back(Descriptor{});            // the contested keypoint
  gallery.descriptors.push_back(basis_descriptor(7, 9.0f));  // far decoy for second distances
  gallery.keypoints.push_back(fixtures::make_keypoint(10.0f, 10.0f));
  gallery.keypoints.push_back(fixtures::make_keypoint(200.0f, 200.0f));

  FeatureSet query;
  query.descriptors.push_back(basis_descriptor(0, 0.6f));  // distance 0.6 to gallery 0
  query.descriptors.push_back(basis_descriptor(1, 0.3f));  // distance 0.3 to gallery 0
  query.keypoints.push_back(fixtures::make_keypoint(11.0f, 10.0f));
  query.keypoints.push_back(fixtures::make_keypoint(12.0f, 10.0f));

  const auto matches = ratio_match(query, gallery, 0.8);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].query_index == 1);
  CHECK(matches[0].gallery_index == 0);
}

TEST_CASE("one-to-one pruning breaks exact ties by query index") {
  FeatureSet gallery;
  gallery.descriptors.push_back(Descriptor{});
  gallery.descriptors.push_back(basis_descriptor(7, 9.0f));
  gallery.keypoints.push_back(fixtures::make_keypoint(10.0f, 10.0f));
  gallery.keypoints.push_back(fixtures::make_keypoint(200.0f, 200.0f));

  FeatureSet query;
  query.descriptors.push_back(basis_descriptor(0, 0.5f));
  query.descriptors.push_back(basis_descriptor(1, 0.5f));  // same distance, different axis
  query.keypoints.push_back(fixtures::make_keypoint(11.0f, 10.0f));
  query.keypoints.push_back(fixtures::make_keypoint(12.0f, 10.0f));

  const auto matches = ratio_match(query, gallery, 0.8);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].query_index == 0);
}

TEST_CASE("alr retains every translation consistent match") {
  const FeatureSet gallery = features_at(kSpread, 100);
  std::vector<std::pair<float, float>> shifted;
  for (const auto& [x, y] : kSpread) shifted.push_back({x + 7.0f, y + 4.0f});
  const FeatureSet query = features_at(shifted, 100);
  const auto matches = identity_matches(kSpread.size());

  const AlrVotes votes = compute_alr_votes(matches, query, gallery, AlrParams{});
  // A pure translation: every pair votes ratio 1 (the central bin, up to the
  // floor-edge between bins 9 and 10) and angle delta 0 (bin 12 of 24).
  CHECK(votes.dominant_angle_bin == 12);
  CHECK((votes.dominant_ratio_bin == 9 || votes.dominant_ratio_bin == 10));
  const double pairs = 8.0 * 7.0 / 2.0;
  CHECK(votes.cell(votes.dominant_ratio_bin, votes.dominant_angle_bin) == pairs);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    CHECK(votes.per_match[i][0] == 7);
    CHECK(votes.per_match[i][1] == 7);
  }

  const auto kept = alr_filter(matches, query, gallery, AlrParams{});
  CHECK(as_pairs(kept) == as_pairs(matches));
}

TEST_CASE("alr retains a similarity transform: 30 degrees and scale 0.8") {
  const FeatureSet gallery = features_at(kSpread, 200);
  const double c = std::cos(std::numbers::pi / 6.0);
  const double s = std::sin(std::numbers::pi / 6.0);
  std::vector<std::pair<float, float>> moved;
  for (const auto& [x, y] : kSpread) {
    const double rx = 0.8 * (c * x - s * y) + 12.0;
    const double ry = 0.8 * (s * x + c * y) - 5.0;
    moved.push_back({static_cast<float>(rx), static_cast<float>(ry)});
  }
  const FeatureSet query = features_at(moved, 200);
  const auto matches = identity_matches(kSpread.size());

  const AlrVotes votes = compute_alr_votes(matches, query, gallery, AlrParams{});
  // log(0.8) maps to ratio bin 8 of 20 over [0.25, 4); +30 degrees maps to
  // angle bin 14 of 24 (bins centred on multiples of 15 degrees).
  CHECK(votes.dominant_ratio_bin == 8);
  CHECK(votes.dominant_angle_bin == 14);
  CHECK(votes.cell(8, 14) == 28.0);

  const auto kept = alr_filter(matches, query, gallery, AlrParams{});
  CHECK(as_pairs(kept) == as_pairs(matches));  // all 8 retained
}

TEST_CASE("alr removes a planted outlier and keeps the consistent seven") {
  std::vector<std::pair<float, float>> shifted;
  for (std::size_t i = 0; i < 7; ++i) {
    shifted.push_back({kSpread[i].first + 5.0f, kSpread[i].second + 9.0f});
  }
  // The eighth match points somewhere inconsistent with the translation.
  shifted.push_back({kSpread[7].first - 40.0f, kSpread[7].second + 80.0f});

  const FeatureSet gallery = features_at(kSpread, 300);
  const FeatureSet query = features_at(shifted, 300);
  const auto matches = identity_matches(kSpread.size());

  const auto kept = alr_filter(matches, query, gallery, AlrParams{});
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 7; ++i) expected.insert({i, i});
  CHECK(as_pairs(kept) == expected);  // exact set: outlier gone, seven intact
}

TEST_CASE("fewer than two matches pass through unchanged") {
  const FeatureSet gallery = features_at({{10.0f, 10.0f}}, 400);
  const FeatureSet query = features_at({{20.0f, 25.0f}}, 400);
  const std::vector<MatchPair> one = {{0, 0, 0.2, 0.8}};
  const auto kept = alr_filter(one, query, gallery, AlrParams{});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].query_index == 0);
  CHECK(alr_filter({}, query, gallery, AlrParams{}).empty());
}

TEST_CASE("coincident keypoints contribute no geometry") {
  // Both query keypoints sit on the same spot: the only pair is invalid, so
  // neither match has a valid vote and both are dropped.
  const FeatureSet gallery = features_at({{10.0f, 10.0f}, {90.0f, 120.0f}}, 500);
  const FeatureSet query = features_at({{50.0f, 50.0f}, {50.0f, 50.0f}}, 500);
  const auto matches = identity_matches(2);
  const AlrVotes votes = compute_alr_votes(matches, query, gallery, AlrParams{});
  CHECK(votes.per_match[0][1] == 0);
  CHECK(votes.per_match[1][1] == 0);
  CHECK(alr_filter(matches, query, gallery, AlrParams{}).empty());
}

TEST_CASE("alr parameter validation") {
  AlrParams p;
  p.ratio_bins = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.ratio_min = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.ratio_max = 0.1;  // below ratio_min
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.inlier_band = -1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.min_pair_votes = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_NOTHROW(AlrParams{}.validate());
}

TEST_CASE("vote histogram accounts for every valid pair") {
  const FeatureSet gallery = features_at(kSpread, 600);
  std::vector<std::pair<float, float>> shifted;
  for (const auto& [x, y] : kSpread) shifted.push_back({x + 3.0f, y - 2.0f});
  const FeatureSet query = features_at(shifted, 600);
  const auto matches = identity_matches(kSpread.size());
  const AlrVotes votes = compute_alr_votes(matches, query, gallery, AlrParams{});
  double total = 0.0;
  for (const double v : votes.histogram) total += v;
  CHECK(total == 28.0);
  REQUIRE(votes.histogram.size() ==
          static_cast<std::size_t>(votes.ratio_bins) * votes.angle_bins);
}

TEST_CASE("identify ranks the true identity first") {
  const FeatureSet a = features_at(kSpread, 700);
  const FeatureSet b = features_at(kSpread, 800);
  const FeatureSet c = features_at(kSpread, 900);

  // The query carries b's descriptors at translated positions.
  std::vector<std::pair<float, float>> shifted;
  for (const auto& [x, y] : kSpread) shifted.push_back({x + 6.0f, y + 2.0f});
  FeatureSet query = features_at(shifted, 800);

  const std::vector<EnrolledFeatures> gallery = {
      {"alice", &a}, {"bob", &b}, {"carol", &c}};
  const auto ranked = identify(query, gallery);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].identity_id == "bob");
  CHECK(ranked[0].inlier_matches == 8);
  CHECK(ranked[0].raw_matches == 8);
  CHECK(ranked[0].inlier_matches >= ranked[1].inlier_matches);
  CHECK(ranked[1].inlier_matches >= ranked[2].inlier_matches);
}

TEST_CASE("identify requires a gallery") {
  const FeatureSet query = features_at({{1.0f, 2.0f}}, 1000);
  CHECK_THROWS_AS(identify(query, {}), Error);
}

TEST_CASE("score_candidate reports raw and inlier counts consistently") {
  const FeatureSet gallery = features_at(kSpread, 1100);
  std::vector<std::pair<float, float>> shifted;
  for (const auto& [x, y] : kSpread) shifted.push_back({x + 1.0f, y + 1.0f});
  const FeatureSet query = features_at(shifted, 1100);
  const ScoredCandidate scored = score_candidate(query, gallery, "probe");
  CHECK(scored.identity_id == "probe");
  CHECK(scored.raw_matches == 8);
  CHECK(scored.inlier_matches == 8);
  CHECK(static_cast<int>(scored.inlier_pairs.size()) == scored.inlier_matches);
  CHECK(scored.inlier_matches <= scored.raw_matches);
}

}  // TEST_SUITE

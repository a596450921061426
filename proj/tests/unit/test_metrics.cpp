#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "zsdbench/error.hpp"
#include "zsdbench/matcher.hpp"
#include "zsdbench/metrics.hpp"

using zsd::MatchEntry;
using zsd::MatchRecord;
using zsd::PrPoint;

namespace {

MatchRecord record(std::vector<std::pair<double, bool>> entries, std::size_t gts) {
  MatchRecord r;
  r.total_gt_count = gts;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    MatchEntry e;
    e.score = entries[i].first;
    e.is_tp = entries[i].second;
    e.input_index = i;
    r.entries.push_back(e);
  }
  return r;
}

void check_curve(const std::vector<PrPoint>& got, const std::vector<PrPoint>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].recall == doctest::Approx(want[i].recall));
    CHECK(got[i].precision == doctest::Approx(want[i].precision));
  }
}

zsd::DetectionSet copy_of(const zsd::GroundTruthDataset& gt) {
  zsd::DetectionSet d;
  for (const auto& a : gt.annotations()) d.entries.push_back({a.image_id, a.bbox, 1.0, ""});
  return d;
}

}  // namespace

TEST_CASE("threshold grid") {
  const auto g = zsd::ThresholdGrid::coco_default();
  REQUIRE(g.values().size() == 10);
  CHECK(g.values().front() == 0.5);
  CHECK(g.values()[5] == 0.75);
  CHECK(g.values().back() == 0.95);
  CHECK(g.contains(0.75));
  CHECK(zsd::ThresholdGrid::parse("0.5, 0.75").values() == std::vector<double>{0.5, 0.75});
  CHECK_THROWS_AS(zsd::ThresholdGrid::parse("0.75,0.5"), zsd::Error);
  CHECK_THROWS_AS(zsd::ThresholdGrid::parse("0,0.5"), zsd::Error);
  CHECK_THROWS_AS(zsd::ThresholdGrid::parse("0.5,1.2"), zsd::Error);
  CHECK_THROWS_AS(zsd::ThresholdGrid::parse(""), zsd::Error);
  CHECK_THROWS_AS(zsd::ThresholdGrid::parse("0.5,abc"), zsd::Error);
}

TEST_CASE("pr_curve examples") {
  std::vector<MatchRecord> one{record({{0.9, true}}, 1)};
  check_curve(zsd::pr_curve(one), {{1.0, 1.0}});

  std::vector<MatchRecord> fp_tp{record({{0.9, false}, {0.8, true}}, 1)};
  check_curve(zsd::pr_curve(fp_tp), {{0.0, 0.0}, {1.0, 0.5}});

  std::vector<MatchRecord> two_tp{record({{0.9, true}, {0.8, true}}, 2)};
  check_curve(zsd::pr_curve(two_tp), {{0.5, 1.0}, {1.0, 1.0}});

  std::vector<MatchRecord> none{record({}, 0)};
  CHECK_THROWS_AS(zsd::pr_curve(none), zsd::Error);
}

TEST_CASE("pr_curve pools records by score") {
  std::vector<MatchRecord> recs{record({{0.5, true}}, 1), record({{0.9, false}, {0.7, true}}, 2)};
  check_curve(zsd::pr_curve(recs), {{0.0, 0.0}, {1.0 / 3, 0.5}, {2.0 / 3, 2.0 / 3}});
}

TEST_CASE("average_precision examples") {
  const std::vector<PrPoint> perfect{{1.0, 1.0}};
  CHECK(zsd::average_precision(perfect) == 1.0);
  const std::vector<PrPoint> half{{0.0, 0.0}, {1.0, 0.5}};
  CHECK(zsd::average_precision(half) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(zsd::average_precision(std::vector<PrPoint>{}) == 0.0);
  // recall 0.5 at precision 1: levels 0..0.50 count, 51 of 101
  const std::vector<PrPoint> partial{{0.5, 1.0}};
  CHECK(zsd::average_precision(partial) == doctest::Approx(51.0 / 101.0).epsilon(1e-12));
}

TEST_CASE("evaluate examples") {
  std::mt19937_64 rng(3);
  const auto gt = fixtures::random_dataset(rng, 4, 3);
  const auto perfect = zsd::evaluate(gt, copy_of(gt));
  CHECK(perfect.map50 == 1.0);
  CHECK(perfect.map75 == 1.0);
  CHECK(perfect.map5095 == 1.0);
  for (const auto& [t, ap] : perfect.ap_by_threshold) CHECK(ap == 1.0);
  CHECK(perfect.counts.gts == gt.annotations().size());

  const auto empty = zsd::evaluate(gt, zsd::DetectionSet{});
  CHECK(empty.map50 == 0.0);
  CHECK(empty.map75 == 0.0);
  CHECK(empty.map5095 == 0.0);
}

TEST_CASE("evaluate errors and options") {
  const zsd::GroundTruthDataset gt({{1, "a.jpg", 100, 100}}, {}, {{1, "muzzle"}});
  zsd::DetectionSet det;
  det.entries.push_back({1, {0, 0, 5, 5}, 0.5, ""});
  const auto r = zsd::evaluate(gt, det);
  CHECK(r.map50 == 0.0);
  CHECK_FALSE(r.warnings.empty());
  zsd::EvalOptions strict;
  strict.strict_no_ground_truth = true;
  CHECK_THROWS_AS(zsd::evaluate(gt, det, zsd::ThresholdGrid::coco_default(), strict), zsd::Error);

  det.entries.push_back({2, {0, 0, 5, 5}, 0.5, ""});
  try {
    zsd::evaluate(gt, det);
    FAIL("expected UnknownImage");
  } catch (const zsd::Error& e) {
    CHECK(e.code() == zsd::ErrorCode::UnknownImage);
  }

  const zsd::GroundTruthDataset two({{1, "a.jpg", 100, 100}},
                                    {{1, 1, 1, {0, 0, 10, 10}}, {2, 1, 2, {50, 50, 10, 10}}},
                                    {{1, "muzzle"}, {2, "ear"}});
  zsd::DetectionSet d2;
  d2.entries.push_back({1, {0, 0, 10, 10}, 0.9, ""});
  CHECK_THROWS_AS(zsd::evaluate(two, d2), zsd::Error);
  zsd::EvalOptions cat;
  cat.category_id = 1;
  CHECK(zsd::evaluate(two, d2, zsd::ThresholdGrid::coco_default(), cat).map50 == 1.0);
}

TEST_CASE("custom thresholds are reported alongside the default grid") {
  std::mt19937_64 rng(8);
  const auto inst = fixtures::random_instance(rng);
  const auto r = zsd::evaluate(inst.gt, inst.det, zsd::ThresholdGrid::parse("0.3,0.5"));
  REQUIRE(r.ap_at(0.3).has_value());
  CHECK(*r.ap_at(0.3) == doctest::Approx(oracle::ap(inst.oracle_det, inst.oracle_gt, 0.3)));
  CHECK(r.ap_at(0.95).has_value());
  CHECK(r.ap_by_threshold.size() == 11);
}

TEST_CASE("evaluate matches the brute-force oracle") {
  std::mt19937_64 rng(2024);
  const auto grid = oracle::coco_thresholds();
  for (int i = 0; i < 300; ++i) {
    const auto inst = fixtures::random_instance(rng);
    const auto r = zsd::evaluate(inst.gt, inst.det);
    double sum = 0.0;
    for (double t : grid) {
      const double want = oracle::ap(inst.oracle_det, inst.oracle_gt, t);
      sum += want;
      CHECK(std::abs(*r.ap_at(t) - want) <= 1e-9);
    }
    CHECK(std::abs(r.map5095 - sum / 10) <= 1e-9);
    CHECK(r.map50 == *r.ap_at(0.5));
    CHECK(r.map75 == *r.ap_at(0.75));
    CHECK(r.map50 >= 0.0);
    CHECK(r.map50 <= 1.0);
  }
}

TEST_CASE("interpolated precision is non-increasing, AP within [0,1]") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixtures::random_instance(rng);
    if (inst.gt.annotations().empty()) continue;
    std::vector<MatchRecord> recs;
    for (const auto& im : inst.gt.images()) {
      std::vector<zsd::Detection> dets;
      for (const auto& d : inst.det.entries) {
        if (d.image_id == im.id) dets.push_back(d);
      }
      const auto anns = inst.gt.annotations_for(im.id);
      recs.push_back(zsd::match(dets, anns, 0.5));
    }
    const auto curve = zsd::pr_curve(recs);
    double prev = 2.0;
    for (int k = 0; k <= 100; ++k) {
      double best = 0.0;
      for (const auto& p : curve) {
        if (p.recall >= k / 100.0) best = std::max(best, p.precision);
      }
      CHECK(best <= prev);
      prev = best;
    }
    const double ap = zsd::average_precision(curve);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
  }
}

TEST_CASE("a new top-scoring TP never lowers AP") {
  std::mt19937_64 rng(4242);
  int tried = 0;
  for (int i = 0; i < 400; ++i) {
    auto inst = fixtures::random_instance(rng);
    const auto before = zsd::evaluate(inst.gt, inst.det);
    // copy of a GT box that no detection matches at the strictest threshold
    // used, placed above every existing score
    for (const auto& a : inst.gt.annotations()) {
      bool hit = false;
      for (const auto& d : inst.det.entries) {
        hit = hit || (d.image_id == a.image_id && zsd::iou(d.bbox, a.bbox) >= 0.5);
      }
      if (hit) continue;
      double top = 0.0;
      for (const auto& d : inst.det.entries) top = std::max(top, d.score);
      auto det = inst.det;
      det.entries.push_back({a.image_id, a.bbox, std::min(1.0, top + 0.05), ""});
      if (top >= 1.0) break;
      const auto after = zsd::evaluate(inst.gt, det);
      for (std::size_t k = 0; k < after.ap_by_threshold.size(); ++k) {
        CHECK(after.ap_by_threshold[k].second >= before.ap_by_threshold[k].second - 1e-12);
      }
      ++tried;
      break;
    }
  }
  CHECK(tried > 50);
}

TEST_CASE("image order and cross-image tie order do not change the report") {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixtures::random_instance(rng);
    const auto base = zsd::evaluate(inst.gt, inst.det);

    auto images = inst.gt.images();
    std::shuffle(images.begin(), images.end(), rng);
    auto anns = inst.gt.annotations();
    const zsd::GroundTruthDataset shuffled(images, anns, inst.gt.categories());

    // reorder detections across images, keeping each image's own order
    auto det = inst.det;
    std::stable_sort(det.entries.begin(), det.entries.end(),
                     [](const auto& a, const auto& b) { return a.image_id > b.image_id; });
    const auto r = zsd::evaluate(shuffled, det);
    CHECK(r.map5095 == base.map5095);
    CHECK(r.ap_by_threshold == base.ap_by_threshold);
  }
}

TEST_CASE("report serialization") {
  std::mt19937_64 rng(6);
  const auto inst = fixtures::random_instance(rng);
  auto r = zsd::evaluate(inst.gt, inst.det);
  r.warnings.push_back("note");
  const auto back = zsd::report_from_json(zsd::report_to_json(r));
  CHECK(back.ap_by_threshold == r.ap_by_threshold);
  CHECK(back.map50 == r.map50);
  CHECK(back.map5095 == r.map5095);
  CHECK(back.counts.detections == r.counts.detections);
  CHECK(back.warnings == r.warnings);
  CHECK(zsd::report_csv_header() == "map5095,map50,map75,images,gts,detections,partial");
}

TEST_CASE("aggregate_runs") {
  const std::vector<double> v{0.74, 0.76, 0.77, 0.75, 0.78};
  const auto agg = zsd::aggregate_runs(v);
  CHECK(agg.mean == doctest::Approx(0.76).epsilon(1e-12));
  CHECK(agg.n_runs == 5);
  REQUIRE(agg.ci_halfwidth.has_value());
  // t(0.975, 4) from an independent table
  const double want = oracle::t_halfwidth(v, 2.7764451051977987);
  CHECK(std::abs(*agg.ci_halfwidth - want) <= 1e-12);
  CHECK(*agg.ci_halfwidth == doctest::Approx(0.0196).epsilon(0.01));

  const std::vector<double> same(5, 0.768);
  const auto flat = zsd::aggregate_runs(same);
  CHECK(flat.mean == 0.768);
  CHECK(*flat.ci_halfwidth == 0.0);

  const std::vector<double> single{0.5};
  CHECK_FALSE(zsd::aggregate_runs(single).ci_halfwidth.has_value());
  CHECK_THROWS_AS(zsd::aggregate_runs(std::vector<double>{}), zsd::Error);

  const auto normal = zsd::aggregate_runs(v, zsd::CiMethod::Normal);
  CHECK(std::abs(*normal.ci_halfwidth - oracle::t_halfwidth(v, 1.959963984540054)) <= 1e-12);
  CHECK(zsd::ci_quantile(2, zsd::CiMethod::StudentT) == doctest::Approx(12.706204736174707));
}

TEST_CASE("format_mean_ci") {
  CHECK(zsd::format_mean_ci(0.768, 0.025) == "0.768 ± 0.025");
  CHECK(zsd::format_mean_ci(0.768, std::nullopt) == "0.768");
  CHECK(zsd::format_mean_ci(0.76, 0.0196, 4) == "0.7600 ± 0.0196");
}

// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "zsdbench/adapter.hpp"
#include "zsdbench/error.hpp"
#include "zsdbench/harness.hpp"
#include "zsdbench/learning_curve.hpp"
#include "zsdbench/metrics.hpp"
#include "zsdbench/mock_detector.hpp"
#include "zsdbench/presets.hpp"
#include "zsdbench/prompt_cascade.hpp"
#include "zsdbench/report.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Tolerances and sizes.
constexpr int kOracleInstances = 1000;
constexpr double kOracleTolerance = 1e-9;
constexpr double kOracleBudgetS = 30.0;
constexpr double kCiTolerance = 1e-12;
constexpr int kDegradationSeeds = 30;
constexpr double kDegradationBudgetS = 120.0;

Outcome metrics_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  const auto grid = oracle::coco_thresholds();
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto inst = fixtures::random_instance(rng, 6, 5, 8);
    const auto r = zsd::evaluate(inst.gt, inst.det);
    for (double t : grid) {
      const double diff = std::abs(*r.ap_at(t) - oracle::ap(inst.oracle_det, inst.oracle_gt, t));
      worst = std::max(worst, diff);
      bad += diff > kOracleTolerance;
    }
  }
  const double s = seconds_since(start);
  return {bad == 0 && s < kOracleBudgetS,
          fmt::format("{} instances x {} thresholds, max |diff| {:.3g} (tol {:g}), {} mismatches, {:.1f} s",
                      kOracleInstances, grid.size(), worst, kOracleTolerance, bad, s)};
}

Outcome perfect_detector() {
  std::mt19937_64 rng(7);
  int datasets = 0;
  for (int k = 0; k < 25; ++k) {
    const auto gt = fixtures::random_dataset(rng, 1 + k % 9, 1 + k % 6);
    if (gt.annotations().empty()) continue;
    const auto r = zsd::evaluate(gt, zsd::mock_detect(gt, zsd::MockParams{0, 0, 0, 0, std::uint64_t(k)}));
    if (r.map50 != 1.0 || r.map75 != 1.0 || r.map5095 != 1.0) {
      return {false, fmt::format("dataset {}: map50 {} map75 {} map5095 {}", k, r.map50, r.map75,
                                 r.map5095)};
    }
    ++datasets;
  }
  return {true, fmt::format("{} random datasets, every metric exactly 1.0", datasets)};
}

Outcome cascade_bytes() {
  const std::vector<std::string> reference = {
      "cattle muzzle",
      "cattle muzzle, the nose and mouth of a cattle",
      "cattle muzzle, the nose and mouth of a cattle, the lower front part of a cattle's face",
      "cattle muzzle, the nose and mouth of a cattle, the lower front part of a cattle's face, "
      "the snout of a cattle",
      "cattle muzzle, the nose and mouth of a cattle, the lower front part of a cattle's face, "
      "the snout of a cattle, the area around the nostrils and lips of a cattle",
      "cattle muzzle, the nose and mouth of a cattle, the lower front part of a cattle's face, "
      "the snout of a cattle, the area around the nostrils and lips of a cattle, the fleshy soft "
      "rounded part of a cattle's face used for eating and smelling",
      "cattle muzzle, the nose and mouth of a cattle, the lower front part of a cattle's face, "
      "the snout of a cattle, the area around the nostrils and lips of a cattle, the fleshy soft "
      "rounded part of a cattle's face used for eating and smelling, cattle's face with visible "
      "nasal cavities",
  };
  const std::vector<std::string> fragments(zsd::presets::kMuzzleFragments.begin(),
                                           zsd::presets::kMuzzleFragments.end());
  const auto built = zsd::build_cascade(fragments);
  const auto from_file = zsd::read_cascade_file(fixtures::data_dir() + "/muzzle_prompts.txt");
  if (built.prompts() != reference) return {false, "built-in fragments differ from reference prompts"};
  if (from_file.prompts() != reference) return {false, "muzzle_prompts.txt differs from reference prompts"};
  const std::string tail = "the area around the nostrils and lips of a cattle";
  const std::string& best = built.prompt(zsd::presets::kMuzzleBestPrompt);
  if (best.size() < tail.size() || best.substr(best.size() - tail.size()) != tail) {
    return {false, "configured best prompt does not end with the expected fragment"};
  }
  return {true, "7/7 prompts byte-identical (built-in list and data file); prompt 5 is the best prompt"};
}

Outcome crossover_table() {
  const auto curves = zsd::import_learning_curves(fixtures::data_dir() + "/muzzle_learning_curves.csv");
  if (curves.size() != 12) return {false, fmt::format("{} curves imported, expected 12", curves.size())};
  // spot checks against known curve values
  for (const auto& c : curves) {
    if (c.points.size() != 5) return {false, fmt::format("{}/{} has {} points", c.model, c.dataset, c.points.size())};
    if (c.model == "YOLOv3" && c.dataset == "CSU" &&
        c.points != std::map<std::int64_t, double>{{10, 0.491}, {20, 0.661}, {40, 0.712}, {80, 0.834}, {160, 0.829}}) {
      return {false, "YOLOv3/CSU points differ from the reference table"};
    }
    if (c.model == "YOLOv7" && c.dataset == "CSU" &&
        c.points != std::map<std::int64_t, double>{{10, 0.431}, {20, 0.689}, {40, 0.765}, {80, 0.968}, {160, 0.968}}) {
      return {false, "YOLOv7/CSU points differ from the reference table"};
    }
  }
  std::vector<std::pair<std::string, double>> targets;
  for (const auto& [name, v] : zsd::presets::kZeroShotMap50) targets.emplace_back(name, v);
  int forty = 0, eighty = 0;
  for (const auto& row : zsd::crossover_table(curves, targets)) {
    const bool v7csu = row.model == "YOLOv7" && row.dataset == "CSU";
    const std::int64_t want = v7csu ? 40 : 80;
    const std::int64_t want_low = v7csu ? 20 : 40;
    if (!row.result.reached || row.result.samples != want || row.result.interval_low != want_low) {
      return {false, fmt::format("{}/{}: got {} (reached {}), expected {}", row.model, row.dataset,
                                 row.result.samples, row.result.reached, want)};
    }
    (want == 40 ? forty : eighty)++;
  }
  return {true, fmt::format("12 curves: YOLOv7/CSU = 40 in (20, 40], {} others = 80 in (40, 80]", eighty)};
}

Outcome ci_formula() {
  const std::vector<double> v{0.74, 0.76, 0.77, 0.75, 0.78};
  const auto agg = zsd::aggregate_runs(v);
  // t(0.975, 4) from an independent table
  const double want = oracle::t_halfwidth(v, 2.7764451051977987);
  const double diff = std::abs(*agg.ci_halfwidth - want);
  const double mean_diff = std::abs(agg.mean - 0.76);
  const std::vector<double> same(5, 0.768);
  const auto flat = zsd::aggregate_runs(same);
  const bool zero = flat.ci_halfwidth && *flat.ci_halfwidth == 0.0 && flat.mean == 0.768;
  const bool rounds = zsd::format_mean_ci(agg, 4) == "0.7600 ± 0.0196";
  return {diff <= kCiTolerance && mean_diff <= kCiTolerance && zero && rounds,
          fmt::format("mean {:.6f}, halfwidth {:.10f} vs closed form {:.10f} (|diff| {:.3g}, tol {:g}); "
                      "zero-variance halfwidth {}",
                      agg.mean, *agg.ci_halfwidth, want, diff, kCiTolerance,
                      flat.ci_halfwidth ? fmt::format("{}", *flat.ci_halfwidth) : "absent")};
}

Outcome ci_row() {
  const std::string want = "0.340 ± 0.021 | 0.768 ± 0.025 | 0.180 ± 0.021";
  zsd::ReportRow row;
  row.metrics[0] = {0.340, 0.021, 5, {}};
  row.metrics[1] = {0.768, 0.025, 5, {}};
  row.metrics[2] = {0.180, 0.021, 5, {}};
  const std::string direct = zsd::render_metric_cells(row);
  if (direct != want) return {false, fmt::format("rendered \"{}\"", direct)};

  // Same row reached through aggregation: five runs per metric spread so that
  // the interval halfwidth is the target value.
  const double q = 2.7764451051977987;
  const double means[] = {0.340, 0.768, 0.180}, hws[] = {0.021, 0.025, 0.021};
  std::vector<zsd::RunRecord> records(5);
  for (int k = 0; k < 5; ++k) {
    zsd::EvalReport e;
    double* slots[] = {&e.map5095, &e.map50, &e.map75};
    for (int m = 0; m < 3; ++m) {
      const double step = hws[m] * std::sqrt(5.0) / (q * std::sqrt(2.5));
      *slots[m] = means[m] + (k - 2) * step;
    }
    records[k].spec.backend.name = "backend-a";
    records[k].report = e;
  }
  const auto table = zsd::table_report(records, zsd::GroupBy::Backend);
  const std::string aggregated = zsd::render_metric_cells(table.rows.at(0));
  if (aggregated != want) {
    return {false, fmt::format("aggregated row \"{}\"", aggregated)};
  }
  return {true, fmt::format("\"{}\" (direct and via five aggregated runs)", want)};
}

Outcome protocol_robustness() {
  fixtures::TempDir tmp;
  std::mt19937_64 rng(99);
  const auto gt = fixtures::random_dataset(rng, 8, 4);
  const auto gt_path = tmp / "gt.json";
  fixtures::write_coco(gt, gt_path);
  zsd::RunStore store(tmp / "runs");

  zsd::RunOptions opts;
  opts.adapter.request_timeout = std::chrono::milliseconds(1000);
  opts.adapter.startup_timeout = std::chrono::milliseconds(5000);
  opts.adapter.max_in_flight = 3;
  opts.store = &store;

  auto spec_for = [&](const std::string& mode) {
    zsd::ExperimentSpec s;
    s.dataset_ref = gt_path;
    s.prompt = "cattle muzzle";
    s.backend.name = "fake";
    s.backend.command = fixtures::fake_adapter() + " " + mode + " --gt " + gt_path.string();
    return s;
  };

  // Honest adapters, in and out of order, must agree with the built-in
  // perfect detector.
  const double reference = zsd::evaluate(gt, zsd::mock_detect(gt, {})).map5095;
  for (const char* mode : {"echo", "shuffle"}) {
    const auto r = zsd::run_experiment_with_detections(spec_for(mode), opts);
    if (!r.record.status.ok || r.record.report->map5095 != reference) {
      return {false, fmt::format("{} adapter: status {} map5095 {}", mode, r.record.status.ok,
                                 r.record.report ? r.record.report->map5095 : -1.0)};
    }
  }

  struct Case {
    const char* mode;
    zsd::ErrorCode code;
    const char* needle;
  };
  const Case cases[] = {
      {"truncate", zsd::ErrorCode::AdapterProtocolError, "request id 2"},
      {"garbage", zsd::ErrorCode::AdapterProtocolError, "request id 2"},
      {"duplicate", zsd::ErrorCode::AdapterProtocolError, "request id 1"},
      {"unknown", zsd::ErrorCode::AdapterProtocolError, "request id 1002"},
      {"missing", zsd::ErrorCode::AdapterTimeout, "image_id"},
      {"missing-exit --exit-after 4", zsd::ErrorCode::AdapterProtocolError, "request id 2"},
      {"bad-box", zsd::ErrorCode::AdapterProtocolError, "request id 2"},
      {"noisy-tail", zsd::ErrorCode::AdapterProtocolError, "request id 1"},
      {"crash", zsd::ErrorCode::AdapterLaunchFailure, "handshake"},
  };
  std::vector<std::string> seen;
  for (const auto& c : cases) {
    const auto r = zsd::run_experiment(spec_for(c.mode), opts);
    if (r.status.ok || r.report || !r.status.code || *r.status.code != c.code ||
        r.status.reason.find(c.needle) == std::string::npos) {
      return {false, fmt::format("{} adapter: ok={} code={} reason \"{}\"", c.mode, r.status.ok,
                                 r.status.code ? zsd::to_string(*r.status.code) : "-", r.status.reason)};
    }
    seen.push_back(fmt::format("{}->{}", c.mode, zsd::to_string(c.code)));
  }
  // nothing persisted from a failed run carries metrics
  std::size_t ok_records = 0;
  for (const auto& r : store.load_all()) ok_records += r.report.has_value();
  if (ok_records != 2) return {false, fmt::format("{} records with metrics, expected 2", ok_records)};
  return {true, fmt::format("honest adapters match reference; {}", fmt::join(seen, ", "))};
}

Outcome degradation() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  const auto gt = fixtures::random_dataset(rng, 20, 5);
  const double jitters[] = {0.0, 0.05, 0.1, 0.2, 0.4};
  std::vector<double> means;
  for (double j : jitters) {
    double sum = 0.0;
    for (int seed = 0; seed < kDegradationSeeds; ++seed) {
      const zsd::MockParams p{j, 0.0, 0.0, 0.1, static_cast<std::uint64_t>(1000 + seed)};
      sum += zsd::evaluate(gt, zsd::mock_detect(gt, p)).map50;
    }
    means.push_back(sum / kDegradationSeeds);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < means.size(); ++i) monotone = monotone && means[i] <= means[i - 1];
  const double s = seconds_since(start);
  return {monotone && s < kDegradationBudgetS,
          fmt::format("{} seeds, mean mAP@0.5 over jitter {{0, 0.05, 0.1, 0.2, 0.4}}: {:.4f}; {:.1f} s",
                      kDegradationSeeds, fmt::join(means, ", "), s)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"metrics-oracle-equivalence", metrics_oracle},
      {"perfect-detector-identity", perfect_detector},
      {"cascade-byte-exactness", cascade_bytes},
      {"crossover-reproduction", crossover_table},
      {"ci-formula", ci_formula},
      {"ci-row-rendering", ci_row},
      {"protocol-robustness", protocol_robustness},
      {"statistical-degradation", degradation},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}

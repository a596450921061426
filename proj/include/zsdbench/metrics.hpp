#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zsdbench/coco.hpp"
#include "zsdbench/matcher.hpp"

namespace zsd {

// Strictly increasing IoU thresholds in (0,1].
class ThresholdGrid {
 public:
  // 0.50, 0.55, ..., 0.95
  static ThresholdGrid coco_default();
  // Comma separated list, e.g. "0.5,0.75".
  static ThresholdGrid parse(std::string_view text);

  explicit ThresholdGrid(std::vector<double> thresholds);

  const std::vector<double>& values() const { return thresholds_; }
  bool contains(double t) const;

  friend bool operator==(const ThresholdGrid&, const ThresholdGrid&) = default;

 private:
  std::vector<double> thresholds_;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Pools the records (in the given order), sorts globally by descending
// score with a stable sort and emits one point per detection. Throws
// NoGroundTruth when the pooled ground-truth count is zero.
std::vector<PrPoint> pr_curve(std::span<const MatchRecord> records);

// 101-point interpolated AP: the mean over r in {0, 0.01, ..., 1} of the
// best precision reached at recall >= r (0 where no point qualifies).
double average_precision(std::span<const PrPoint> curve);

struct EvalCounts {
  std::size_t images = 0;
  std::size_t gts = 0;
  std::size_t detections = 0;
};

struct EvalReport {
  std::vector<std::pair<double, double>> ap_by_threshold;  // (threshold, AP), increasing
  double map50 = 0.0;
  double map75 = 0.0;
  double map5095 = 0.0;
  EvalCounts counts;
  bool partial = false;
  std::vector<std::string> warnings;

  std::optional<double> ap_at(double threshold) const;
};

struct EvalOptions {
  // Throw NoGroundTruth instead of reporting AP = 0 with a warning.
  bool strict_no_ground_truth = false;
  // Selects the active category when the dataset carries more than one.
  std::optional<std::int64_t> category_id;
};

// Headline metrics always come from the default grid; thresholds of `grid`
// outside it are reported in ap_by_threshold as well.
EvalReport evaluate(const GroundTruthDataset& gt, const DetectionSet& det,
                    const ThresholdGrid& grid = ThresholdGrid::coco_default(),
                    const EvalOptions& opts = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);

enum class CiMethod { StudentT, Normal };

struct RunAggregate {
  double mean = 0.0;
  std::optional<double> ci_halfwidth;  // absent when n_runs == 1
  std::size_t n_runs = 0;
  std::vector<double> values;
};

// Mean and two-sided 95% interval halfwidth q * s / sqrt(n), where s uses
// the n-1 denominator and q is t(0.975, n-1) or z(0.975).
RunAggregate aggregate_runs(std::span<const double> values, CiMethod method = CiMethod::StudentT);

double ci_quantile(std::size_t n_runs, CiMethod method);

// "0.768 ± 0.025", or just "0.768" without a halfwidth.
std::string format_mean_ci(double mean, std::optional<double> halfwidth, int decimals = 3);
std::string format_mean_ci(const RunAggregate& agg, int decimals = 3);

}  // namespace zsd

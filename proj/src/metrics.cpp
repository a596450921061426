#include "zsdbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "json.hpp"

namespace zsd {

namespace {

constexpr int kRecallLevels = 101;

}  // namespace

ThresholdGrid ThresholdGrid::coco_default() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return ThresholdGrid(std::move(t));
}

ThresholdGrid ThresholdGrid::parse(std::string_view text) {
  std::vector<double> t;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string piece(text.substr(start, comma - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(piece, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || piece.find_first_not_of(" \t", used) != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("bad IoU threshold \"{}\"", piece));
    }
    t.push_back(v);
    start = comma + 1;
  }
  return ThresholdGrid(std::move(t));
}

ThresholdGrid::ThresholdGrid(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
  if (thresholds_.empty()) throw Error(ErrorCode::InvalidArgument, "empty threshold grid");
  for (std::size_t i = 0; i < thresholds_.size(); ++i) {
    const double t = thresholds_[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("IoU threshold {} not in (0,1]", t));
    }
    if (i > 0 && !(t > thresholds_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "threshold grid must be strictly increasing");
    }
  }
}

bool ThresholdGrid::contains(double t) const {
  return std::find(thresholds_.begin(), thresholds_.end(), t) != thresholds_.end();
}

std::vector<PrPoint> pr_curve(std::span<const MatchRecord> records) {
  std::size_t total_gt = 0;
  std::vector<const MatchEntry*> pooled;
  for (const auto& r : records) {
    total_gt += r.total_gt_count;
    for (const auto& e : r.entries) pooled.push_back(&e);
  }
  if (total_gt == 0) throw Error(ErrorCode::NoGroundTruth, "no ground-truth boxes to recall");

  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const MatchEntry* a, const MatchEntry* b) { return a->score > b->score; });

  std::vector<PrPoint> curve;
  curve.reserve(pooled.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const MatchEntry* e : pooled) {
    (e->is_tp ? tp : fp) += 1;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  // Suffix maximum of precision gives the interpolated envelope.
  std::vector<double> envelope(curve.size());
  double best = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    best = std::max(best, curve[i].precision);
    envelope[i] = best;
  }
  // Recall is non-decreasing along the curve, so walk both in step.
  double sum = 0.0;
  std::size_t k = 0;
  for (int level = 0; level < kRecallLevels; ++level) {
    const double r = level / 100.0;
    while (k < curve.size() && curve[k].recall < r) ++k;
    if (k == curve.size()) break;
    sum += envelope[k];
  }
  return sum / kRecallLevels;
}

std::optional<double> EvalReport::ap_at(double threshold) const {
  for (const auto& [t, ap] : ap_by_threshold) {
    if (t == threshold) return ap;
  }
  return std::nullopt;
}

EvalReport evaluate(const GroundTruthDataset& gt, const DetectionSet& det,
                    const ThresholdGrid& grid, const EvalOptions& opts) {
  std::set<std::int64_t> active;
  for (const auto& a : gt.annotations()) active.insert(a.category_id);
  if (!opts.category_id && active.size() > 1) {
    throw Error(ErrorCode::MultipleCategories,
                fmt::format("{} active categories; select one to evaluate", active.size()));
  }

  // Images in id order make pooling independent of document order.
  std::map<std::int64_t, std::vector<Annotation>> gts_by_image;
  for (const auto& im : gt.images()) gts_by_image[im.id];
  std::size_t gt_count = 0;
  for (const auto& a : gt.annotations()) {
    if (opts.category_id && a.category_id != *opts.category_id) continue;
    gts_by_image[a.image_id].push_back(a);
    ++gt_count;
  }
  std::map<std::int64_t, std::vector<Detection>> dets_by_image;
  for (const auto& d : det.entries) {
    if (!gt.has_image(d.image_id)) {
      throw Error(ErrorCode::UnknownImage,
                  fmt::format("detection references image_id {} absent from ground truth",
                              d.image_id));
    }
    dets_by_image[d.image_id].push_back(d);
  }

  EvalReport report;
  report.counts = {gt.images().size(), gt_count, det.entries.size()};

  const ThresholdGrid headline = ThresholdGrid::coco_default();
  std::vector<double> thresholds = grid.values();
  for (double t : headline.values()) {
    if (!grid.contains(t)) thresholds.push_back(t);
  }
  std::sort(thresholds.begin(), thresholds.end());

  const std::vector<Detection> none;
  for (double t : thresholds) {
    std::vector<MatchRecord> records;
    records.reserve(gts_by_image.size());
    for (const auto& [image_id, gts] : gts_by_image) {
      auto it = dets_by_image.find(image_id);
      records.push_back(match(it == dets_by_image.end() ? none : it->second, gts, t));
    }
    double ap = 0.0;
    try {
      ap = average_precision(pr_curve(records));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoGroundTruth || opts.strict_no_ground_truth) throw;
      if (report.warnings.empty()) {
        report.warnings.push_back("no ground-truth boxes; AP reported as 0");
      }
    }
    report.ap_by_threshold.emplace_back(t, ap);
  }

  report.map50 = *report.ap_at(0.50);
  report.map75 = *report.ap_at(0.75);
  double sum = 0.0;
  for (double t : headline.values()) sum += *report.ap_at(t);
  report.map5095 = sum / 10.0;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json ap = nlohmann::json::array();
  for (const auto& [t, v] : report.ap_by_threshold) ap.push_back({{"iou", t}, {"ap", v}});
  nlohmann::json doc = {
      {"map50", report.map50},
      {"map75", report.map75},
      {"map5095", report.map5095},
      {"ap_by_threshold", std::move(ap)},
      {"counts",
       {{"images", report.counts.images},
        {"gts", report.counts.gts},
        {"detections", report.counts.detections}}},
      {"partial", report.partial},
      {"warnings", report.warnings},
  };
  return doc.dump(2);
}

EvalReport report_from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::MalformedDocument, "report is not a JSON object");
  }
  try {
    EvalReport r;
    r.map50 = doc.at("map50").get<double>();
    r.map75 = doc.at("map75").get<double>();
    r.map5095 = doc.at("map5095").get<double>();
    for (const auto& e : doc.at("ap_by_threshold")) {
      r.ap_by_threshold.emplace_back(e.at("iou").get<double>(), e.at("ap").get<double>());
    }
    const auto& c = doc.at("counts");
    r.counts = {c.at("images").get<std::size_t>(), c.at("gts").get<std::size_t>(),
                c.at("detections").get<std::size_t>()};
    r.partial = doc.value("partial", false);
    r.warnings = doc.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, fmt::format("report: {}", e.what()));
  }
}

std::string report_csv_header() {
  return "map5095,map50,map75,images,gts,detections,partial";
}

std::string report_csv_row(const EvalReport& report) {
  return fmt::format("{:.6f},{:.6f},{:.6f},{},{},{},{}", report.map5095, report.map50,
                     report.map75, report.counts.images, report.counts.gts,
                     report.counts.detections, report.partial ? 1 : 0);
}

double ci_quantile(std::size_t n_runs, CiMethod method) {
  if (method == CiMethod::Normal) {
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 0.975);
  }
  if (n_runs < 2) throw Error(ErrorCode::InvalidArgument, "t interval needs at least two runs");
  const boost::math::students_t_distribution<double> dist(static_cast<double>(n_runs - 1));
  return boost::math::quantile(dist, 0.975);
}

RunAggregate aggregate_runs(std::span<const double> values, CiMethod method) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no run values to aggregate");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite run value");
  }

  RunAggregate agg;
  agg.values.assign(values.begin(), values.end());
  agg.n_runs = values.size();

  const bool constant =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  if (constant) {
    agg.mean = values.front();
    if (agg.n_runs > 1) agg.ci_halfwidth = 0.0;
    return agg;
  }

  const double n = static_cast<double>(values.size());
  agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (agg.n_runs == 1) return agg;

  double ss = 0.0;
  for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
  const double s = std::sqrt(ss / (n - 1.0));
  agg.ci_halfwidth = ci_quantile(agg.n_runs, method) * s / std::sqrt(n);
  return agg;
}

std::string format_mean_ci(double mean, std::optional<double> halfwidth, int decimals) {
  if (!halfwidth) return fmt::format("{:.{}f}", mean, decimals);
  return fmt::format("{:.{}f} ± {:.{}f}", mean, decimals, *halfwidth, decimals);
}

std::string format_mean_ci(const RunAggregate& agg, int decimals) {
  return format_mean_ci(agg.mean, agg.ci_halfwidth, decimals);
}

}  // namespace zsd

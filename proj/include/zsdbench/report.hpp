#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsdbench/harness.hpp"
#include "zsdbench/metrics.hpp"

namespace zsd {

enum class GroupBy { Prompt, Backend };

// Metric columns in display order.
enum class Metric { Map5095 = 0, Map50 = 1, Map75 = 2 };
inline constexpr std::array<Metric, 3> kMetrics = {Metric::Map5095, Metric::Map50, Metric::Map75};
std::string_view metric_label(Metric m);  // "mAP@[0.50:0.95]", "mAP@0.5", "mAP@0.75"

struct ReportRow {
  std::string label;
  std::optional<int> prompt_number;
  std::string prompt;
  std::size_t n_runs = 0;
  std::size_t failed_runs = 0;
  std::array<RunAggregate, 3> metrics;  // indexed by Metric
  std::array<bool, 3> best{};           // ties are all flagged
  bool partial = false;

  const RunAggregate& at(Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

struct ReportTable {
  GroupBy group_by = GroupBy::Prompt;
  std::vector<ReportRow> rows;

  bool has_ci() const;  // any row aggregated over more than one run
};

// Groups ok records by prompt number (prompt text when unnumbered) or by
// backend name, in first-appearance order (prompt groups sorted by number).
// Failed records are counted but not aggregated; a group without any ok
// record is an EmptyGroup error.
ReportTable table_report(std::span<const RunRecord> records, GroupBy group_by,
                         CiMethod ci = CiMethod::StudentT);

// The metric cells of one row joined by " | ", e.g.
// "0.340 ± 0.021 | 0.768 ± 0.025 | 0.180 ± 0.021".
std::string render_metric_cells(const ReportRow& row, std::span<const Metric> metrics = kMetrics,
                                int decimals = 3);

// Prompt tables show mAP@0.5 only; backend tables show all three metrics.
std::string render_text(const ReportTable& table, int decimals = 3);
std::string render_csv(const ReportTable& table);
std::string render_json(const ReportTable& table);

}  // namespace zsd

#include "zsdbench/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "json.hpp"

namespace zsd {

namespace {

std::size_t display_width(std::string_view s) {
  // UTF-8 code points; every glyph used in these tables is single-width.
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  const std::size_t w = display_width(s);
  if (w < width) out.append(width - w, ' ');
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double metric_of(const EvalReport& r, Metric m) {
  switch (m) {
    case Metric::Map5095: return r.map5095;
    case Metric::Map50: return r.map50;
    case Metric::Map75: return r.map75;
  }
  return 0.0;
}

std::string_view metric_key(Metric m) {
  switch (m) {
    case Metric::Map5095: return "map5095";
    case Metric::Map50: return "map50";
    case Metric::Map75: return "map75";
  }
  return "";
}

std::vector<Metric> shown_metrics(const ReportTable& t) {
  if (t.group_by == GroupBy::Prompt) return {Metric::Map50};
  return {kMetrics.begin(), kMetrics.end()};
}

std::string best_cell(const ReportRow& row, const std::vector<Metric>& metrics) {
  std::vector<std::string> names;
  for (Metric m : metrics) {
    if (row.best[static_cast<std::size_t>(m)]) names.emplace_back(metric_label(m));
  }
  return fmt::format("{}", fmt::join(names, ", "));
}

std::string render_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> widths;
  for (const auto& row : cells) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], display_width(row[i]));
    }
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      if (i) line += " | ";
      line += i + 1 == cells[r].size() ? cells[r][i] : pad(cells[r][i], widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out += std::string(total + 3 * (widths.size() - 1), '-') + "\n";
    }
  }
  return out;
}

}  // namespace

std::string_view metric_label(Metric m) {
  switch (m) {
    case Metric::Map5095: return "mAP@[0.50:0.95]";
    case Metric::Map50: return "mAP@0.5";
    case Metric::Map75: return "mAP@0.75";
  }
  return "";
}

bool ReportTable::has_ci() const {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.n_runs > 1; });
}

ReportTable table_report(std::span<const RunRecord> records, GroupBy group_by, CiMethod ci) {
  if (records.empty()) throw Error(ErrorCode::EmptyGroup, "no run records to report");

  struct Group {
    ReportRow row;
    std::array<std::vector<double>, 3> values;
    std::size_t first_seen = 0;
  };
  std::map<std::string, Group> groups;
  std::size_t order = 0;
  for (const auto& r : records) {
    std::string key;
    if (group_by == GroupBy::Backend) {
      key = r.spec.backend.name;
    } else if (r.spec.prompt_number) {
      key = fmt::format("#{:09d}", *r.spec.prompt_number);
    } else {
      key = "~" + r.spec.prompt;
    }
    auto [it, inserted] = groups.try_emplace(key);
    Group& g = it->second;
    if (inserted) {
      g.first_seen = order++;
      g.row.label = group_by == GroupBy::Backend
                        ? r.spec.backend.name
                        : (r.spec.prompt_number ? std::to_string(*r.spec.prompt_number) : "-");
      g.row.prompt_number = r.spec.prompt_number;
      g.row.prompt = r.spec.prompt;
    }
    if (!r.status.ok || !r.report) {
      ++g.row.failed_runs;
      continue;
    }
    ++g.row.n_runs;
    g.row.partial = g.row.partial || r.report->partial;
    for (Metric m : kMetrics) {
      g.values[static_cast<std::size_t>(m)].push_back(metric_of(*r.report, m));
    }
  }

  std::vector<Group*> ordered;
  for (auto& [key, g] : groups) ordered.push_back(&g);
  if (group_by == GroupBy::Backend) {
    std::sort(ordered.begin(), ordered.end(),
              [](const Group* a, const Group* b) { return a->first_seen < b->first_seen; });
  }

  ReportTable table;
  table.group_by = group_by;
  for (Group* g : ordered) {
    if (g->row.n_runs == 0) {
      throw Error(ErrorCode::EmptyGroup,
                  fmt::format("group \"{}\" has no successful runs", g->row.label));
    }
    for (Metric m : kMetrics) {
      const auto i = static_cast<std::size_t>(m);
      g->row.metrics[i] = aggregate_runs(g->values[i], ci);
    }
    table.rows.push_back(std::move(g->row));
  }

  for (Metric m : kMetrics) {
    const auto i = static_cast<std::size_t>(m);
    double best = table.rows.front().metrics[i].mean;
    for (const auto& row : table.rows) best = std::max(best, row.metrics[i].mean);
    for (auto& row : table.rows) row.best[i] = row.metrics[i].mean == best;
  }
  return table;
}

std::string render_metric_cells(const ReportRow& row, std::span<const Metric> metrics,
                                int decimals) {
  std::vector<std::string> cells;
  for (Metric m : metrics) cells.push_back(format_mean_ci(row.at(m), decimals));
  return fmt::format("{}", fmt::join(cells, " | "));
}

std::string render_text(const ReportTable& table, int decimals) {
  const auto metrics = shown_metrics(table);
  std::vector<std::vector<std::string>> cells;

  std::vector<std::string> header;
  if (table.group_by == GroupBy::Prompt) {
    header = {"Prompt No.", "Prompt"};
  } else {
    header = {"Backend"};
  }
  for (Metric m : metrics) header.emplace_back(metric_label(m));
  header.emplace_back("runs");
  header.emplace_back("best");
  cells.push_back(header);

  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.label + (row.partial ? " (partial)" : "")};
    if (table.group_by == GroupBy::Prompt) line.push_back(row.prompt);
    for (Metric m : metrics) line.push_back(format_mean_ci(row.at(m), decimals));
    line.push_back(row.failed_runs ? fmt::format("{} (+{} failed)", row.n_runs, row.failed_runs)
                                   : std::to_string(row.n_runs));
    line.push_back(best_cell(row, metrics));
    cells.push_back(std::move(line));
  }

  std::string out = render_table(cells);
  if (table.has_ci()) {
    out += "values are mean ± 95% confidence interval halfwidth over runs\n";
  }
  if (std::any_of(table.rows.begin(), table.rows.end(), [](const ReportRow& r) { return r.partial; })) {
    out += "PARTIAL: some runs were evaluated without all images\n";
  }
  return out;
}

std::string render_csv(const ReportTable& table) {
  const bool ci = table.has_ci();
  std::vector<std::string> header{"group"};
  if (table.group_by == GroupBy::Prompt) {
    header.emplace_back("prompt_number");
    header.emplace_back("prompt");
  }
  header.insert(header.end(), {"n_runs", "failed_runs", "partial"});
  for (Metric m : kMetrics) {
    header.push_back(fmt::format("{}_mean", metric_key(m)));
    if (ci) header.push_back(fmt::format("{}_ci95", metric_key(m)));
  }
  for (Metric m : kMetrics) header.push_back(fmt::format("best_{}", metric_key(m)));

  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& row : table.rows) {
    std::vector<std::string> f{csv_field(row.label)};
    if (table.group_by == GroupBy::Prompt) {
      f.push_back(row.prompt_number ? std::to_string(*row.prompt_number) : "");
      f.push_back(csv_field(row.prompt));
    }
    f.push_back(std::to_string(row.n_runs));
    f.push_back(std::to_string(row.failed_runs));
    f.push_back(row.partial ? "1" : "0");
    for (Metric m : kMetrics) {
      const auto& a = row.at(m);
      f.push_back(fmt::format("{:.6f}", a.mean));
      if (ci) f.push_back(a.ci_halfwidth ? fmt::format("{:.6f}", *a.ci_halfwidth) : "");
    }
    for (Metric m : kMetrics) f.push_back(row.best[static_cast<std::size_t>(m)] ? "1" : "0");
    out += fmt::format("{}\n", fmt::join(f, ","));
  }
  return out;
}

std::string render_json(const ReportTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json j = {{"group", row.label},
                        {"n_runs", row.n_runs},
                        {"failed_runs", row.failed_runs},
                        {"partial", row.partial}};
    if (table.group_by == GroupBy::Prompt) {
      j["prompt_number"] = row.prompt_number ? nlohmann::json(*row.prompt_number) : nullptr;
      j["prompt"] = row.prompt;
    }
    for (Metric m : kMetrics) {
      const auto& a = row.at(m);
      j[std::string(metric_key(m))] = {
          {"mean", a.mean},
          {"ci95", a.ci_halfwidth ? nlohmann::json(*a.ci_halfwidth) : nullptr},
          {"values", a.values},
          {"best", row.best[static_cast<std::size_t>(m)]}};
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json doc = {{"group_by", table.group_by == GroupBy::Prompt ? "prompt" : "backend"},
                        {"rows", std::move(rows)}};
  return doc.dump(2) + "\n";
}

}  // namespace zsd

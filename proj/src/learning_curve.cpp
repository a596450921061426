#include "zsdbench/learning_curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "zsdbench/coco.hpp"
#include "zsdbench/error.hpp"

namespace zsd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma split with RFC 4180 style double quotes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_number) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && trim(cur).empty()) {
      cur.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedRow, fmt::format("line {}: unterminated quote", line_number));
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

}  // namespace

CrossoverResult crossover(const LearningCurve& curve, double zero_shot_map50) {
  if (curve.points.empty()) {
    throw Error(ErrorCode::EmptyInput,
                fmt::format("learning curve {}/{} has no points", curve.model, curve.dataset));
  }
  CrossoverResult r;
  std::int64_t previous = 0;
  for (const auto& [samples, map50] : curve.points) {
    if (map50 >= zero_shot_map50) {
      r.reached = true;
      r.samples = samples;
      r.interval_low = previous;
      return r;
    }
    previous = samples;
  }
  return r;
}

std::vector<LearningCurve> import_learning_curves_text(std::string_view csv) {
  std::vector<LearningCurve> curves;
  bool header_seen = false;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t nl = csv.find('\n', start);
    if (nl == std::string_view::npos) nl = csv.size();
    const std::string_view raw = csv.substr(start, nl - start);
    start = nl + 1;
    ++line_number;
    if (trim(raw).empty()) continue;

    auto fields = split_csv(raw, line_number);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"model", "dataset", "samples", "map50"}) {
        throw Error(ErrorCode::MalformedRow,
                    fmt::format("line {}: expected header model,dataset,samples,map50", line_number));
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("line {}: expected 4 fields, got {}", line_number, fields.size()));
    }
    const std::string& model = fields[0];
    const std::string& dataset = fields[1];
    if (model.empty() || dataset.empty()) {
      throw Error(ErrorCode::MalformedRow, fmt::format("line {}: empty model or dataset", line_number));
    }
    std::int64_t samples = 0;
    const auto& s = fields[2];
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), samples);
    if (ec != std::errc() || p != s.data() + s.size() || samples <= 0) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("line {}: samples \"{}\" is not a positive integer", line_number, s));
    }
    double map50 = 0.0;
    std::size_t used = 0;
    try {
      map50 = std::stod(fields[3], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != fields[3].size() || !(map50 >= 0.0 && map50 <= 1.0)) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("line {}: map50 \"{}\" is not a ratio in [0,1]", line_number, fields[3]));
    }

    auto it = std::find_if(curves.begin(), curves.end(), [&](const LearningCurve& c) {
      return c.model == model && c.dataset == dataset;
    });
    if (it == curves.end()) {
      curves.push_back({model, dataset, {}});
      it = std::prev(curves.end());
    }
    if (!it->points.emplace(samples, map50).second) {
      throw Error(ErrorCode::DuplicatePoint,
                  fmt::format("({}, {}, {}) appears twice", model, dataset, samples));
    }
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, "missing header model,dataset,samples,map50");
  return curves;
}

std::vector<LearningCurve> import_learning_curves(const std::filesystem::path& path) {
  return import_learning_curves_text(read_text_file(path));
}

std::vector<std::pair<std::string, double>> parse_zero_shot_targets(std::string_view text) {
  std::vector<std::pair<std::string, double>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(start, comma - start));
    start = comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("zero-shot target \"{}\" is not DATASET=VALUE", item));
    }
    const std::string value(trim(item.substr(eq + 1)));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || !(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("zero-shot value \"{}\" not in [0,1]", value));
    }
    out.emplace_back(std::string(trim(item.substr(0, eq))), v);
  }
  return out;
}

std::vector<CrossoverRow> crossover_table(
    const std::vector<LearningCurve>& curves,
    const std::vector<std::pair<std::string, double>>& zero_shot) {
  std::vector<CrossoverRow> rows;
  for (const auto& c : curves) {
    auto it = std::find_if(zero_shot.begin(), zero_shot.end(),
                           [&](const auto& z) { return z.first == c.dataset; });
    if (it == zero_shot.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("no zero-shot target for dataset \"{}\"", c.dataset));
    }
    rows.push_back({c.model, c.dataset, it->second, crossover(c, it->second)});
  }
  return rows;
}

std::string render_crossover_text(const std::vector<CrossoverRow>& rows) {
  std::size_t wm = 5;
  std::size_t wd = 7;
  for (const auto& r : rows) {
    wm = std::max(wm, r.model.size());
    wd = std::max(wd, r.dataset.size());
  }
  std::string out = fmt::format("{:<{}} | {:<{}} | zero-shot | crossover | interval\n", "model", wm,
                                "dataset", wd);
  out += std::string(wm + wd + 42, '-') + "\n";
  for (const auto& r : rows) {
    const std::string where = r.result.reached ? std::to_string(r.result.samples) : "not reached";
    const std::string interval =
        r.result.reached ? fmt::format("({}, {}]", r.result.interval_low, r.result.samples) : "-";
    out += fmt::format("{:<{}} | {:<{}} | {:>9.3f} | {:>9} | {}\n", r.model, wm, r.dataset, wd,
                       r.zero_shot, where, interval);
  }
  return out;
}

std::string render_crossover_csv(const std::vector<CrossoverRow>& rows) {
  std::string out = "model,dataset,zero_shot_map50,reached,crossover_samples,interval_low\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.3f},{},{},{}\n", r.model, r.dataset, r.zero_shot,
                       r.result.reached ? 1 : 0,
                       r.result.reached ? std::to_string(r.result.samples) : "",
                       r.result.reached ? std::to_string(r.result.interval_low) : "");
  }
  return out;
}

std::string render_crossover_json(const std::vector<CrossoverRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"model", r.model},
                   {"dataset", r.dataset},
                   {"zero_shot_map50", r.zero_shot},
                   {"reached", r.result.reached},
                   {"crossover_samples", r.result.reached ? nlohmann::json(r.result.samples) : nullptr},
                   {"interval_low", r.result.reached ? nlohmann::json(r.result.interval_low) : nullptr}});
  }
  return arr.dump(2) + "\n";
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_crossover_svg(const std::vector<LearningCurve>& curves,
                                 std::string_view dataset, double zero_shot) {
  constexpr double kWidth = 640;
  constexpr double kHeight = 400;
  constexpr double kLeft = 60;
  constexpr double kRight = 150;
  constexpr double kTop = 30;
  constexpr double kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::vector<const LearningCurve*> selected;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& c : curves) {
    if (c.dataset != dataset || c.points.empty()) continue;
    selected.push_back(&c);
    const double a = std::log2(static_cast<double>(c.points.begin()->first));
    const double b = std::log2(static_cast<double>(c.points.rbegin()->first));
    if (selected.size() == 1) {
      lo = a;
      hi = b;
    } else {
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
  }
  if (hi <= lo) hi = lo + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::int64_t samples) {
    return kLeft + (std::log2(static_cast<double>(samples)) - lo) / (hi - lo) * plot_w;
  };
  auto py = [&](double v) { return kTop + (1.0 - v) * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"18\">mAP@0.5 vs training samples ({3})</text>\n",
      kWidth, kHeight, kLeft, xml_escape(dataset));
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n",
      kLeft, kTop, kTop + plot_h, kLeft + plot_w);
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n",
                       kLeft - 6, py(v) + 4, v);
  }
  std::map<std::int64_t, bool> ticks;
  for (const auto* c : selected) {
    for (const auto& [s, v] : c->points) ticks[s] = true;
  }
  for (const auto& [s, unused] : ticks) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(s),
                       kTop + plot_h + 18, s);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">training samples</text>\n",
                     kLeft + plot_w / 2, kHeight - 10);

  for (std::size_t i = 0; i < selected.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string pts;
    for (const auto& [s, v] : selected[i]->points) {
      pts += fmt::format("{:.1f},{:.1f} ", px(s), py(v));
    }
    if (!pts.empty()) pts.pop_back();
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                       color, pts);
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", kLeft + plot_w + 10,
        kTop + 16 * (static_cast<double>(i) + 1), color, xml_escape(selected[i]->model));
  }
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"black\" "
      "stroke-dasharray=\"6,4\"/>\n"
      "<text x=\"{3}\" y=\"{4:.1f}\">zero-shot {5:.3f}</text>\n",
      kLeft, py(zero_shot), kLeft + plot_w, kLeft + plot_w + 10,
      kTop + 16 * (static_cast<double>(selected.size()) + 2), zero_shot);
  svg += "</svg>\n";
  return svg;
}

}  // namespace zsd

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zsd {

// mAP@0.5 of a fine-tuned detector as a function of labeled training samples.
struct LearningCurve {
  std::string model;
  std::string dataset;
  std::map<std::int64_t, double> points;  // samples -> map50
};

struct CrossoverResult {
  bool reached = false;
  std::int64_t samples = 0;
  // (interval_low, samples]; interval_low is the previous grid point or 0.
  std::int64_t interval_low = 0;
};

// Smallest sample count whose map50 is >= the zero-shot score.
CrossoverResult crossover(const LearningCurve& curve, double zero_shot_map50);

// CSV with header "model,dataset,samples,map50". Curves come back in order
// of first appearance. Throws MalformedRow or DuplicatePoint.
std::vector<LearningCurve> import_learning_curves_text(std::string_view csv);
std::vector<LearningCurve> import_learning_curves(const std::filesystem::path& path);

// "CSU=0.753,UNE=0.789" -> [(CSU, 0.753), (UNE, 0.789)]
std::vector<std::pair<std::string, double>> parse_zero_shot_targets(std::string_view text);

struct CrossoverRow {
  std::string model;
  std::string dataset;
  double zero_shot = 0.0;
  CrossoverResult result;
};

// One row per curve; every curve's dataset needs a zero-shot target.
std::vector<CrossoverRow> crossover_table(
    const std::vector<LearningCurve>& curves,
    const std::vector<std::pair<std::string, double>>& zero_shot);

std::string render_crossover_text(const std::vector<CrossoverRow>& rows);
std::string render_crossover_csv(const std::vector<CrossoverRow>& rows);
std::string render_crossover_json(const std::vector<CrossoverRow>& rows);

// SVG line chart of every curve for `dataset` (log2 sample axis) with the
// zero-shot score drawn as a horizontal line.
std::string render_crossover_svg(const std::vector<LearningCurve>& curves,
                                 std::string_view dataset, double zero_shot);

}  // namespace zsd

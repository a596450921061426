#include "zsdbench/experiment.hpp"

#include <fmt/format.h>

namespace zsd {

using nlohmann::json;

void ExperimentSpec::validate() const {
  auto ratio = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!ratio(detector_params.box_threshold) || !ratio(detector_params.text_threshold)) {
    throw Error(ErrorCode::InvalidArgument, "box/text thresholds must lie in [0,1]");
  }
  if (subsample && !(subsample->fraction > 0.0 && subsample->fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("subsample fraction {} not in (0,1]", subsample->fraction));
  }
  if (!backend.is_mock() && backend.command.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("backend \"{}\" has no adapter command", backend.name));
  }
  if (backend.is_mock()) mock.validate();
}

json to_json(const ExperimentSpec& spec) {
  json j = {
      {"dataset_ref", spec.dataset_ref.string()},
      {"prompt", spec.prompt},
      {"prompt_number", spec.prompt_number ? json(*spec.prompt_number) : json(nullptr)},
      {"backend", {{"name", spec.backend.name}, {"command", spec.backend.command}}},
      {"seed", spec.seed},
      {"thresholds", spec.thresholds.values()},
      {"detector_params",
       {{"box_threshold", spec.detector_params.box_threshold},
        {"text_threshold", spec.detector_params.text_threshold}}},
      {"subsample", spec.subsample ? json{{"fraction", spec.subsample->fraction},
                                          {"seed", spec.subsample->seed}}
                                   : json(nullptr)},
      {"image_root", spec.image_root ? json(spec.image_root->string()) : json(nullptr)},
  };
  if (spec.backend.is_mock()) {
    j["mock"] = {{"jitter_frac", spec.mock.jitter_frac},
                 {"drop_rate", spec.mock.drop_rate},
                 {"spurious_rate", spec.mock.spurious_rate},
                 {"score_noise", spec.mock.score_noise}};
  }
  return j;
}

ExperimentSpec spec_from_json(const json& j) {
  try {
    ExperimentSpec s;
    s.dataset_ref = j.at("dataset_ref").get<std::string>();
    s.prompt = j.at("prompt").get<std::string>();
    if (!j.at("prompt_number").is_null()) s.prompt_number = j.at("prompt_number").get<int>();
    s.backend.name = j.at("backend").at("name").get<std::string>();
    s.backend.command = j.at("backend").at("command").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.thresholds = ThresholdGrid(j.at("thresholds").get<std::vector<double>>());
    s.detector_params.box_threshold = j.at("detector_params").at("box_threshold").get<double>();
    s.detector_params.text_threshold = j.at("detector_params").at("text_threshold").get<double>();
    if (!j.at("subsample").is_null()) {
      s.subsample = Subsample{j.at("subsample").at("fraction").get<double>(),
                              j.at("subsample").at("seed").get<std::uint64_t>()};
    }
    if (j.contains("image_root") && !j.at("image_root").is_null()) {
      s.image_root = j.at("image_root").get<std::string>();
    }
    if (j.contains("mock")) {
      const auto& m = j.at("mock");
      s.mock.jitter_frac = m.at("jitter_frac").get<double>();
      s.mock.drop_rate = m.at("drop_rate").get<double>();
      s.mock.spurious_rate = m.at("spurious_rate").get<double>();
      s.mock.score_noise = m.at("score_noise").get<double>();
    }
    s.mock.seed = s.seed;
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, fmt::format("experiment spec: {}", e.what()));
  }
}

}  // namespace zsd

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "zsdbench/metrics.hpp"
#include "zsdbench/mock_detector.hpp"

namespace zsd {

// Reference defaults of the public Grounding DINO release.
struct DetectorParams {
  double box_threshold = 0.35;
  double text_threshold = 0.25;

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

// Evaluate on a seeded random subset of the images.
struct Subsample {
  double fraction = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const Subsample&, const Subsample&) = default;
};

inline constexpr const char* kMockBackend = "mock";

struct BackendSpec {
  std::string name = kMockBackend;
  std::string command;  // launch command; unused for the built-in mock

  bool is_mock() const { return name == kMockBackend; }

  friend bool operator==(const BackendSpec&, const BackendSpec&) = default;
};

struct ExperimentSpec {
  std::filesystem::path dataset_ref;
  std::string prompt;
  std::optional<int> prompt_number;
  BackendSpec backend;
  std::uint64_t seed = 0;
  ThresholdGrid thresholds = ThresholdGrid::coco_default();
  DetectorParams detector_params;
  std::optional<Subsample> subsample;
  MockParams mock;  // only read when backend.is_mock(); its seed is replaced by `seed`
  std::optional<std::filesystem::path> image_root;

  void validate() const;  // throws InvalidArgument

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

}  // namespace zsd

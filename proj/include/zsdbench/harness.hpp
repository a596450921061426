#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsdbench/adapter.hpp"
#include "zsdbench/coco.hpp"
#include "zsdbench/experiment.hpp"
#include "zsdbench/metrics.hpp"

namespace zsd {

struct RunStatus {
  bool ok = true;
  std::optional<ErrorCode> code;
  std::string reason;
};

struct RunRecord {
  ExperimentSpec spec;
  std::filesystem::path detections_path;  // empty until persisted
  std::optional<EvalReport> report;       // present iff status.ok
  double wall_time_s = 0.0;
  RunStatus status;
  std::vector<std::int64_t> failed_images;
  std::string created;  // UTC, ISO 8601
  std::filesystem::path record_dir;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

// Append-only store: runs/<timestamp>-<hash>/{record.json,detections.json}.
// Existing directories are never reused. One writer at a time.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Fills record.record_dir and record.detections_path.
  std::filesystem::path append(RunRecord& record, const DetectionSet& detections);

  // Every complete record (one with record.json), ordered by directory name.
  std::vector<RunRecord> load_all() const;

 private:
  std::filesystem::path root_;
};

struct RunOptions {
  bool allow_partial = false;
  bool top1 = false;  // keep only the best detection per image
  AdapterOptions adapter;
  IngestOptions ingest;
  EvalOptions eval;
  RunStore* store = nullptr;
};

struct RunOutcome {
  RunRecord record;
  DetectionSet detections;
};

// Drives one experiment end to end. Dataset and spec validation problems
// throw; adapter failures come back as a failed record (and are persisted
// when a store is given).
RunOutcome run_experiment_with_detections(const ExperimentSpec& spec, const RunOptions& opts = {});
RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

// Image ids selected by a subsample spec: round(fraction * N) ids (at least
// one), drawn by a seeded shuffle and returned in dataset order.
std::vector<std::int64_t> subsample_images(const GroundTruthDataset& gt, const Subsample& s);

DetectionSet keep_top1(const DetectionSet& d);

std::string utc_timestamp();

}  // namespace zsd

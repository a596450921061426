#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zsdbench/coco.hpp"

namespace zsd {

struct MatchEntry {
  double score = 0.0;
  bool is_tp = false;
  std::optional<std::int64_t> matched_annotation_id;
  std::optional<double> iou_at_match;
  std::int64_t image_id = 0;
  std::size_t input_index = 0;  // position in the caller's detection list
};

// Per-image matching outcome; entries are in evaluation order (descending
// score, ties by input order).
struct MatchRecord {
  std::vector<MatchEntry> entries;
  std::size_t total_gt_count = 0;
};

// Greedy COCO-style assignment at one IoU threshold. Each detection, in
// score order, takes the unmatched ground-truth box of highest IoU among
// those with IoU >= threshold; equal IoUs resolve to the earlier box.
// Detections are assumed to belong to a single image.
MatchRecord match(std::span<const Detection> detections, std::span<const Annotation> gts,
                  double threshold);

}  // namespace zsd

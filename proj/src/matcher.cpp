#include "zsdbench/matcher.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace zsd {

MatchRecord match(std::span<const Detection> detections, std::span<const Annotation> gts,
                  double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("IoU threshold {} not in (0,1]", threshold));
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  MatchRecord record;
  record.total_gt_count = gts.size();
  record.entries.reserve(detections.size());
  std::vector<bool> taken(gts.size(), false);

  for (std::size_t di : order) {
    const Detection& d = detections[di];
    MatchEntry entry;
    entry.score = d.score;
    entry.image_id = d.image_id;
    entry.input_index = di;

    std::optional<std::size_t> best;
    double best_iou = threshold;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (taken[gi]) continue;
      const double v = iou(d.bbox, gts[gi].bbox);
      if (v < threshold) continue;
      if (!best || v > best_iou) {
        best = gi;
        best_iou = v;
      }
    }
    if (best) {
      taken[*best] = true;
      entry.is_tp = true;
      entry.matched_annotation_id = gts[*best].id;
      entry.iou_at_match = best_iou;
    }
    record.entries.push_back(entry);
  }
  return record;
}

}  // namespace zsd

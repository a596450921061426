#include "zsdbench/mock_detector.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace zsd {

void MockParams::validate() const {
  auto bad = [](std::string_view what) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("mock parameter {}", what));
  };
  if (!(jitter_frac >= 0.0) || !std::isfinite(jitter_frac)) bad("jitter_frac must be >= 0");
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) bad("drop_rate must be in [0,1]");
  if (!(spurious_rate >= 0.0) || !std::isfinite(spurious_rate)) bad("spurious_rate must be >= 0");
  if (!(score_noise >= 0.0 && score_noise <= 1.0)) bad("score_noise must be in [0,1]");
}

MockRandom::MockRandom(std::uint64_t seed, std::int64_t image_id) {
  const auto id = static_cast<std::uint64_t>(image_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  engine_.seed(seq);
}

double MockRandom::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double MockRandom::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t MockRandom::poisson(double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

std::vector<Detection> mock_detect_image(const ImageInfo& image,
                                         const std::vector<Annotation>& gts,
                                         const MockParams& params, const std::string& prompt) {
  MockRandom rng(params.seed, image.id);
  std::vector<Detection> out;

  for (const auto& a : gts) {
    if (rng.uniform() < params.drop_rate) continue;
    BoundingBox b = a.bbox;
    const double dx = rng.uniform(-1.0, 1.0) * params.jitter_frac;
    const double dy = rng.uniform(-1.0, 1.0) * params.jitter_frac;
    const double dw = rng.uniform(-1.0, 1.0) * params.jitter_frac;
    const double dh = rng.uniform(-1.0, 1.0) * params.jitter_frac;
    const double score = 1.0 - rng.uniform() * params.score_noise;
    if (params.jitter_frac > 0.0) {
      b = {a.bbox.x + dx * a.bbox.w, a.bbox.y + dy * a.bbox.h, a.bbox.w + dw * a.bbox.w,
           a.bbox.h + dh * a.bbox.h};
      if (!validate_box(b, image.width, image.height).accepted()) continue;
      b = clip_box(b, image.width, image.height);
      if (!validate_box(b, image.width, image.height).accepted()) continue;
    }
    out.push_back({image.id, b, score, prompt});
  }

  const std::uint64_t spurious = rng.poisson(params.spurious_rate);
  for (std::uint64_t i = 0; i < spurious; ++i) {
    const double w = rng.uniform(kSpuriousMinExtent, kSpuriousMaxExtent) * image.width;
    const double h = rng.uniform(kSpuriousMinExtent, kSpuriousMaxExtent) * image.height;
    const double x = rng.uniform(0.0, image.width - w);
    const double y = rng.uniform(0.0, image.height - h);
    const double score = rng.uniform() * kSpuriousMaxScore;
    out.push_back({image.id, {x, y, w, h}, score, prompt});
  }
  return out;
}

DetectionSet mock_detect(const GroundTruthDataset& gt, const MockParams& params,
                         const std::string& prompt) {
  params.validate();
  DetectionSet set;
  set.provenance.backend = "mock";
  set.provenance.prompt = prompt;
  set.provenance.seed = params.seed;
  for (const auto& image : gt.images()) {
    auto dets = mock_detect_image(image, gt.annotations_for(image.id), params, prompt);
    set.entries.insert(set.entries.end(), dets.begin(), dets.end());
  }
  return set;
}

}  // namespace zsd

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "zsdbench/coco.hpp"

namespace zsd {

// Synthetic detector that perturbs ground truth.
//
// Randomness comes from std::mt19937_64 (its output sequence is fixed by the
// C++ standard) seeded per image through std::seed_seq with the 32-bit words
// {seed_lo, seed_hi, image_id_lo, image_id_hi}. Uniform doubles take the top
// 53 bits of one 64-bit draw: u = (x >> 11) * 2^-53, so u is in [0,1).
// Poisson counts use Knuth's product method. No std:: distribution is used,
// which keeps outputs identical across standard libraries.
//
// Per GT box, in document order: one draw decides dropping (u < drop_rate);
// a kept box takes four jitter draws (x, y, w, h; each shifted by
// (2u-1)*jitter_frac times the box width or height) and one score draw
// (score = 1 - u*score_noise). Jittered boxes are clipped to the image and
// discarded if degenerate; with jitter_frac == 0 the box is copied verbatim.
// Then a Poisson(spurious_rate) count of spurious boxes follows, each drawing
// width, height (fractions in [0.05, 0.30] of the image), x, y and a score
// u*0.5.
struct MockParams {
  double jitter_frac = 0.0;
  double drop_rate = 0.0;
  double spurious_rate = 0.0;
  double score_noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidArgument

  friend bool operator==(const MockParams&, const MockParams&) = default;
};

inline constexpr double kSpuriousMinExtent = 0.05;
inline constexpr double kSpuriousMaxExtent = 0.30;
inline constexpr double kSpuriousMaxScore = 0.5;

class MockRandom {
 public:
  MockRandom(std::uint64_t seed, std::int64_t image_id);

  double uniform();                      // [0,1)
  double uniform(double lo, double hi);  // [lo,hi)
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

// Detections for every image in `gt`, image order as in the dataset.
// Provenance carries backend "mock", the prompt and the seed; the timestamp
// is left empty so that identical inputs serialize identically.
DetectionSet mock_detect(const GroundTruthDataset& gt, const MockParams& params,
                         const std::string& prompt = "");

// Detections for a single image; `mock_detect` concatenates these.
std::vector<Detection> mock_detect_image(const ImageInfo& image,
                                         const std::vector<Annotation>& gts,
                                         const MockParams& params, const std::string& prompt);

}  // namespace zsd

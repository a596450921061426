#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace zsd::presets {

// Cattle-muzzle prompt fragments, in cascade order (also shipped as
// data/muzzle_prompts.txt).
inline constexpr std::array<std::string_view, 7> kMuzzleFragments = {
    "cattle muzzle",
    "the nose and mouth of a cattle",
    "the lower front part of a cattle's face",
    "the snout of a cattle",
    "the area around the nostrils and lips of a cattle",
    "the fleshy soft rounded part of a cattle's face used for eating and smelling",
    "cattle's face with visible nasal cavities",
};

// Cascade prompt selected for model comparisons.
inline constexpr int kMuzzleBestPrompt = 5;

// Zero-shot mAP@0.5 reference scores per dataset.
inline constexpr std::array<std::pair<std::string_view, double>, 3> kZeroShotMap50 = {{
    {"CSU", 0.753},
    {"UNE", 0.789},
    {"NUCES", 0.758},
}};

}  // namespace zsd::presets

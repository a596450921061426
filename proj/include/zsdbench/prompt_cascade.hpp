#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsdbench/experiment.hpp"

namespace zsd {

inline constexpr std::string_view kCascadeSeparator = ", ";

// Prompts where prompt 1 is the first fragment and every later prompt is
// the previous one, the separator, and the next fragment.
class PromptCascade {
 public:
  const std::vector<std::string>& phrases() const { return phrases_; }
  const std::vector<std::string>& prompts() const { return prompts_; }
  const std::string& separator() const { return separator_; }
  std::size_t size() const { return prompts_.size(); }

  // 1-based, matching how prompts are numbered in reports.
  const std::string& prompt(std::size_t number) const;

  friend PromptCascade build_cascade(std::span<const std::string> phrases,
                                     std::string_view separator);

 private:
  std::vector<std::string> phrases_;
  std::vector<std::string> prompts_;
  std::string separator_;
};

// Throws EmptyPhraseList or EmptyFragment. A fragment is empty when it is
// blank or ends with the separator's non-space part.
PromptCascade build_cascade(std::span<const std::string> phrases,
                            std::string_view separator = kCascadeSeparator);

// One fragment per line; order is significant. A trailing newline does not
// add a fragment, but a blank line anywhere else is an EmptyFragment.
std::vector<std::string> parse_cascade_text(std::string_view text);
PromptCascade read_cascade_file(const std::filesystem::path& path,
                                std::string_view separator = kCascadeSeparator);

// One spec per (prompt, run), prompt-major. Run r of every prompt gets seed
// seed_base + r; all other fields are copied from `base`.
std::vector<ExperimentSpec> sweep_plan(const PromptCascade& cascade, const ExperimentSpec& base,
                                       std::size_t runs, std::uint64_t seed_base);

}  // namespace zsd

#include "zsdbench/prompt_cascade.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace zsd {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::string& PromptCascade::prompt(std::size_t number) const {
  if (number == 0 || number > prompts_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("prompt {} outside 1..{}", number, prompts_.size()));
  }
  return prompts_[number - 1];
}

PromptCascade build_cascade(std::span<const std::string> phrases, std::string_view separator) {
  if (phrases.empty()) throw Error(ErrorCode::EmptyPhraseList, "cascade needs at least one phrase");
  const std::string_view joiner = trim(separator);

  PromptCascade c;
  c.separator_ = std::string(separator);
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const std::string& p = phrases[i];
    const std::string_view body = trim(p);
    if (body.empty() ||
        (!joiner.empty() && body.size() >= joiner.size() &&
         body.substr(body.size() - joiner.size()) == joiner)) {
      throw Error(ErrorCode::EmptyFragment, fmt::format("fragment {} is empty", i + 1));
    }
    c.phrases_.push_back(p);
    c.prompts_.push_back(i == 0 ? p : c.prompts_.back() + c.separator_ + p);
  }
  return c;
}

std::vector<std::string> parse_cascade_text(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) {
      throw Error(ErrorCode::EmptyFragment, fmt::format("blank line {}", lines.size() + 1));
    }
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

PromptCascade read_cascade_file(const std::filesystem::path& path, std::string_view separator) {
  const auto phrases = parse_cascade_text(read_text_file(path));
  return build_cascade(phrases, separator);
}

std::vector<ExperimentSpec> sweep_plan(const PromptCascade& cascade, const ExperimentSpec& base,
                                       std::size_t runs, std::uint64_t seed_base) {
  if (runs == 0) throw Error(ErrorCode::InvalidArgument, "a sweep needs at least one run");
  std::vector<ExperimentSpec> plan;
  plan.reserve(cascade.size() * runs);
  for (std::size_t p = 0; p < cascade.size(); ++p) {
    for (std::size_t r = 0; r < runs; ++r) {
      ExperimentSpec spec = base;
      spec.prompt = cascade.prompts()[p];
      spec.prompt_number = static_cast<int>(p + 1);
      spec.seed = seed_base + r;
      spec.mock.seed = spec.seed;
      plan.push_back(std::move(spec));
    }
  }
  return plan;
}

}  // namespace zsd

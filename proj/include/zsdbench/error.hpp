#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zsd {

// Every failure the library reports maps to exactly one of these codes.
enum class ErrorCode {
  MalformedDocument,
  MissingField,
  DanglingReference,
  DuplicateId,
  InvalidBox,
  MultipleCategories,
  ScoreOutOfRange,
  UnknownImage,
  NoGroundTruth,
  InvalidArgument,
  Io,
  EmptyPhraseList,
  EmptyFragment,
  EmptyInput,
  EmptyGroup,
  MalformedRow,
  DuplicatePoint,
  AdapterLaunchFailure,
  AdapterProtocolError,
  AdapterTimeout,
  PartialRun,
};

std::string_view to_string(ErrorCode code);

// True for the codes produced by talking to an adapter process.
bool is_adapter_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace zsd

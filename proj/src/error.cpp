#include "zsdbench/error.hpp"

namespace zsd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::MultipleCategories: return "MultipleCategories";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyPhraseList: return "EmptyPhraseList";
    case ErrorCode::EmptyFragment: return "EmptyFragment";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::AdapterLaunchFailure: return "AdapterLaunchFailure";
    case ErrorCode::AdapterProtocolError: return "AdapterProtocolError";
    case ErrorCode::AdapterTimeout: return "AdapterTimeout";
    case ErrorCode::PartialRun: return "PartialRun";
  }
  return "Unknown";
}

bool is_adapter_error(ErrorCode code) {
  return code == ErrorCode::AdapterLaunchFailure ||
         code == ErrorCode::AdapterProtocolError ||
         code == ErrorCode::AdapterTimeout || code == ErrorCode::PartialRun;
}

}  // namespace zsd

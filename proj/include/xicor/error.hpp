#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xicor {

enum class ErrorCode {
  TiesPresent,
  DegenerateColumn,
  SampleTooSmall,
  BlockTooLarge,
  DegenerateVariance,
  EmptySubset,
  NotPositiveDefinite,
  BadTau,
  InvalidArgument,
  ShapeMismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TiesPresent: return "TiesPresent";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::BlockTooLarge: return "BlockTooLarge";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::BadTau: return "BadTau";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, std::string_view what) {
  if (!cond) fail(code, std::string(what));
}

}  // namespace xicor

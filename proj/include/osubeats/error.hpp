#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace osubeats {

enum class Errc {
  // .osu parsing
  MissingFormatHeader,
  MissingGeneralSection,
  MissingTimingPoints,
  MalformedLine,
  // archives and corpus
  CorruptArchive,
  UnsafeMemberPath,
  MissingAudio,
  MissingSetId,
  // audio
  NotMp3,
  TruncatedStream,
  NoDurationAvailable,
  // grid and partition
  NoUninheritedPoints,
  NonPositiveBeatLength,
  InvalidArgument,
  // evaluation
  UnsortedInput,
  DegenerateReference,
  MissingDownbeatChannel,
  NonMonotoneTimes,
  DegenerateAnnotation,
  GroupTooSmall,
  NoMatches,
  // export and pipeline
  NameCollisionWithDifferentContent,
  HashMismatch,
  IoFailure,
  EmptyInput,
  NoPredictionsMatched,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingFormatHeader: return "MissingFormatHeader";
    case Errc::MissingGeneralSection: return "MissingGeneralSection";
    case Errc::MissingTimingPoints: return "MissingTimingPoints";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::CorruptArchive: return "CorruptArchive";
    case Errc::UnsafeMemberPath: return "UnsafeMemberPath";
    case Errc::MissingAudio: return "MissingAudio";
    case Errc::MissingSetId: return "MissingSetId";
    case Errc::NotMp3: return "NotMp3";
    case Errc::TruncatedStream: return "TruncatedStream";
    case Errc::NoDurationAvailable: return "NoDurationAvailable";
    case Errc::NoUninheritedPoints: return "NoUninheritedPoints";
    case Errc::NonPositiveBeatLength: return "NonPositiveBeatLength";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnsortedInput: return "UnsortedInput";
    case Errc::DegenerateReference: return "DegenerateReference";
    case Errc::MissingDownbeatChannel: return "MissingDownbeatChannel";
    case Errc::NonMonotoneTimes: return "NonMonotoneTimes";
    case Errc::DegenerateAnnotation: return "DegenerateAnnotation";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::NoMatches: return "NoMatches";
    case Errc::NameCollisionWithDifferentContent: return "NameCollisionWithDifferentContent";
    case Errc::HashMismatch: return "HashMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoPredictionsMatched: return "NoPredictionsMatched";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// A line that could not be parsed. `line()` is 1-based within the source
/// text, or 0 when the line was parsed without file context.
class MalformedLineError : public Error {
 public:
  MalformedLineError(std::size_t line, std::string raw, const std::string& why)
      : Error(Errc::MalformedLine, describe(line, raw, why)), line_(line), raw_(std::move(raw)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& raw() const noexcept { return raw_; }

 private:
  static std::string describe(std::size_t line, const std::string& raw, const std::string& why) {
    std::string out = why;
    if (line > 0) out += " at line " + std::to_string(line);
    out += ": \"" + raw + "\"";
    return out;
  }

  std::size_t line_;
  std::string raw_;
};

}  // namespace osubeats

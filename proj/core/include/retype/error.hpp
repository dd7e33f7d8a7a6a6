#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retype {

enum class ErrorKind {
  kParse,               // syntax error in an input file
  kValidation,          // well-formed input violating the schema
  kNoDebugInfo,         // binary without DWARF sections
  kMalformedDwarf,      // DWARF present but unreadable
  kUnsupported,         // e.g. DWARF version 3, ELF big-endian
  kEmptyCorpus,
  kBinaryMismatch,      // wiring bug: records and index disagree on binary
  kAmbiguousAlignment,
  kCoverage,            // predictions missing or extra
  kDivergence,          // NaN loss during training
  kIo,
  kInternal,
};

std::string_view to_string(ErrorKind kind);

/// Every failure that crosses a module boundary is one of these.  The CLI maps
/// kind() onto exit codes; tests match on kind() rather than message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for problems caused by user input rather than by this program.
  bool is_input_error() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace retype

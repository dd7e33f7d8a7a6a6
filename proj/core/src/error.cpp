#include "retype/error.hpp"

namespace retype {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kNoDebugInfo: return "no debug info";
    case ErrorKind::kMalformedDwarf: return "malformed DWARF";
    case ErrorKind::kUnsupported: return "unsupported input";
    case ErrorKind::kEmptyCorpus: return "empty corpus";
    case ErrorKind::kBinaryMismatch: return "binary mismatch";
    case ErrorKind::kAmbiguousAlignment: return "ambiguous alignment";
    case ErrorKind::kCoverage: return "coverage error";
    case ErrorKind::kDivergence: return "training diverged";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kInternal: return "internal error";
  }
  return "error";
}

bool Error::is_input_error() const noexcept {
  switch (kind_) {
    case ErrorKind::kBinaryMismatch:
    case ErrorKind::kDivergence:
    case ErrorKind::kInternal:
      return false;
    default:
      return true;
  }
}

}  // namespace retype

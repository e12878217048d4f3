// fuseid/common.hpp

// Copyright 2026  The Fuseid Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FUSEID_COMMON_HPP_
#define FUSEID_COMMON_HPP_

#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fuseid {

// Stable error categories. The CLI prints `code_name(code) + ": " + what()`
// as a single line on stderr and exits nonzero, so scripts can match on the
// prefix without parsing free text.
enum class ErrorCode {
  kIo,          // unreadable/unwritable path, short read/write
  kFormat,      // bad magic, truncated or otherwise corrupt file
  kVersion,     // file format version not supported
  kValidation,  // NaN/Inf component, malformed record content
  kDuplicate,   // duplicate (speaker_id, clip_id, modality, split)
  kDimension,   // vector/layer dimension mismatch
  kEmpty,       // empty dataset where samples are required
  kConfig,      // invalid configuration value
  kDiverged,    // non-finite training loss
  kClass,       // class coverage problem (single class, empty class, ...)
  kMismatch,    // incompatible inputs (e.g. reports over different test sets)
};

inline const char* code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:         return "E_IO";
    case ErrorCode::kFormat:     return "E_FORMAT";
    case ErrorCode::kVersion:    return "E_VERSION";
    case ErrorCode::kValidation: return "E_VALIDATION";
    case ErrorCode::kDuplicate:  return "E_DUPLICATE";
    case ErrorCode::kDimension:  return "E_DIMENSION";
    case ErrorCode::kEmpty:      return "E_EMPTY";
    case ErrorCode::kConfig:     return "E_CONFIG";
    case ErrorCode::kDiverged:   return "E_DIVERGED";
    case ErrorCode::kClass:      return "E_CLASS";
    case ErrorCode::kMismatch:   return "E_MISMATCH";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Stream-style message builder: throw Error(code, Msg() << "dim " << d).
class Msg {
 public:
  template <typename T>
  Msg& operator<<(const T& value) {
    stream_ << value;
    return *this;
  }
  operator std::string() const { return stream_.str(); }

 private:
  std::ostringstream stream_;
};

inline bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(std::span<const float> values) {
  for (float v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace fuseid

#endif  // FUSEID_COMMON_HPP_

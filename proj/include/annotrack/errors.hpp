// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace annotrack {

enum class ErrorCode {
  kDegenerateRegion,
  kRegionOutsideFrame,
  kDegenerateBox,
  kMalformedFile,
  kProvider,
  kStaleState,
  kSpecInconsistency,
  kInvalidArgument,
  kIo,
  kNotFound,
  kConflict,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` distinguishes the cases.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace annotrack

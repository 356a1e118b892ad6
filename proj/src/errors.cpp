// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/errors.hpp"

namespace annotrack {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDegenerateRegion: return "degenerate-region";
    case ErrorCode::kRegionOutsideFrame: return "region-outside-frame";
    case ErrorCode::kDegenerateBox: return "degenerate-box";
    case ErrorCode::kMalformedFile: return "malformed-file";
    case ErrorCode::kProvider: return "provider-failure";
    case ErrorCode::kStaleState: return "stale-state";
    case ErrorCode::kSpecInconsistency: return "spec-inconsistency";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown";
}

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/backends/provider.hpp"

#include <algorithm>

#include "annotrack/errors.hpp"

namespace annotrack {

void DetectorInfo::validate() const {
  if (class_names.empty()) throw Error(ErrorCode::kInvalidArgument, "detector declares no classes");
  if (!input_size.valid()) throw Error(ErrorCode::kInvalidArgument, "detector input size must be positive");
}

double Detection::max_score() const {
  return scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
}

int Detection::best_class() const {
  if (scores.empty()) return -1;
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace annotrack

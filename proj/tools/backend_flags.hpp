// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line flags shared by the CLI and the synthetic sidecar.

#pragma once

#include <map>
#include <string>

#include <CLI11.hpp>

#include "annotrack/service/session.hpp"

namespace annotrack::tools {

inline void add_synthetic_flags(CLI::App& app, SyntheticDetectorConfig& det, SyntheticTrackerConfig& trk) {
  static const std::map<std::string, SyntheticDetectorMode> det_modes{
      {"perfect", SyntheticDetectorMode::kPerfect},
      {"noisy", SyntheticDetectorMode::kNoisy},
      {"none", SyntheticDetectorMode::kNone}};
  static const std::map<std::string, SyntheticTrackerMode> trk_modes{
      {"perfect", SyntheticTrackerMode::kPerfect}, {"drifting", SyntheticTrackerMode::kDrifting}};
  app.add_option("--detector-mode", det.mode, "synthetic detector: perfect, noisy, none")
      ->transform(CLI::CheckedTransformer(det_modes));
  app.add_option("--noise-sigma", det.sigma, "noisy detector offset, px")->check(CLI::NonNegativeNumber);
  app.add_option("--p-miss", det.p_miss, "noisy detector miss probability")->check(CLI::Range(0.0, 1.0));
  app.add_option("--noise-seed", det.seed, "noisy detector seed");
  app.add_option("--tracker-mode", trk.mode, "synthetic tracker: perfect, drifting")
      ->transform(CLI::CheckedTransformer(trk_modes));
  app.add_option("--drift-x", trk.bias.x(), "drifting tracker bias per step, px");
  app.add_option("--drift-y", trk.bias.y(), "drifting tracker bias per step, px");
}

}  // namespace annotrack::tools

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Speaks annotrack-proto/1 on stdin/stdout backed by the synthetic providers.

#include <iostream>
#include <memory>

#include "annotrack/backends/protocol.hpp"
#include "annotrack/errors.hpp"
#include "backend_flags.hpp"

int main(int argc, char** argv) {
  using namespace annotrack;
  CLI::App app{"synthetic provider sidecar"};
  std::string scene_path;
  SyntheticDetectorConfig det;
  SyntheticTrackerConfig trk;
  app.add_option("--scene", scene_path, "ground_truth.json of a synthetic scene")->required();
  tools::add_synthetic_flags(app, det, trk);
  CLI11_PARSE(app, argc, argv);

  try {
    auto scene = std::make_shared<const SyntheticScene>(SyntheticScene::load(scene_path));
    SyntheticDetector detector(scene, det);
    SyntheticTracker tracker(scene, trk);
    std::ios::sync_with_stdio(false);
    proto::serve(std::cin, std::cout, &detector, &tracker);
  } catch (const Error& e) {
    std::cerr << "sidecar: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

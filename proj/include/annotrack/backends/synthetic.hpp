// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic synthetic scenes and the test-double providers that read
// their ground truth.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "annotrack/backends/provider.hpp"

namespace annotrack {

struct ObjectSpec {
  int class_id = 0;
  BBox start;
  Point velocity{0, 0};   // px per frame
  Point amplitude{0, 0};  // sinusoidal component, px
  double period = 0;      // frames; 0 disables the sinusoid
  Rgb color{255, 0, 0};
};

struct SceneSpec {
  Size2D frame_size{640, 480};
  std::size_t frame_count = 1;
  std::vector<std::string> class_names{"horse", "zebra", "car", "person"};
  std::vector<ObjectSpec> objects;
};

struct SceneObject {
  int class_id = 0;
  Rgb color{};
  std::vector<BBox> trajectory;  // one integer box per frame
};

/// Solid rectangles over a textured background. Positions are rounded to
/// whole pixels so ground truth is exact at the raster.
class SyntheticScene {
 public:
  /// Throws kSpecInconsistency when an object leaves the frame or two
  /// objects overlap (IOU >= 0.1) in any frame.
  SyntheticScene(std::uint64_t seed, SceneSpec spec);

  std::uint64_t seed() const { return seed_; }
  Size2D frame_size() const { return frame_size_; }
  std::size_t frame_count() const { return frame_count_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const BBox& truth(std::size_t object, std::size_t frame) const;

  Frame render(std::size_t frame) const;
  std::vector<Frame> render_all() const;

  nlohmann::json to_json() const;
  static SyntheticScene from_json(const nlohmann::json& doc);
  static SyntheticScene load(const std::filesystem::path& ground_truth_file);

 private:
  SyntheticScene() = default;
  void check_consistency() const;

  std::uint64_t seed_ = 0;
  Size2D frame_size_;
  std::size_t frame_count_ = 0;
  std::vector<std::string> class_names_;
  std::vector<SceneObject> objects_;
};

/// N disjoint objects with random linear + sinusoidal motion, retried until
/// the scene is consistent.
SceneSpec random_scene_spec(std::uint64_t seed, const Size2D& frame_size, std::size_t frame_count,
                            std::size_t object_count, double min_side = 40, double max_side = 72,
                            double max_speed = 3);

/// Writes <dir>/NNNNNN.png per frame plus <dir>/ground_truth.json.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

inline constexpr const char* kGroundTruthFileName = "ground_truth.json";

// ---------------------------------------------------------------------------

enum class SyntheticDetectorMode { kPerfect, kNoisy, kNone };

struct SyntheticDetectorConfig {
  SyntheticDetectorMode mode = SyntheticDetectorMode::kPerfect;
  double sigma = 1.0;   // noisy: per-axis Gaussian offset of the box origin, px
  double p_miss = 0.0;  // noisy: probability an object is not reported
  double confidence = 0.9;
  double min_contained = 0.8;
  Size2D input_size{300, 300};
  std::uint64_t seed = 0;
};

/// Reports every object whose ground-truth box is at least min_contained
/// inside the hinted region, in detector-input coordinates.
class SyntheticDetector final : public DetectorProvider {
 public:
  SyntheticDetector(std::shared_ptr<const SyntheticScene> scene, SyntheticDetectorConfig cfg = {});

  const DetectorInfo& info() const override { return info_; }
  std::vector<Detection> detect(const Frame& input, const ProviderHint& hint) override;

 private:
  std::shared_ptr<const SyntheticScene> scene_;
  SyntheticDetectorConfig cfg_;
  DetectorInfo info_;
};

enum class SyntheticTrackerMode { kPerfect, kDrifting };

struct SyntheticTrackerConfig {
  SyntheticTrackerMode mode = SyntheticTrackerMode::kPerfect;
  Point bias{0, 0};  // drifting: px per step, frame coordinates
  Size2D input_size{128, 128};
};

/// Perfect mode answers with the ground-truth box of the tracked object.
/// Drifting mode follows the true motion from the crop center and adds
/// `bias` every step. Memory holds the object index, the step count and the
/// accumulated bias.
class SyntheticTracker final : public TrackerProvider {
 public:
  struct Memory {
    std::int32_t object = -1;
    std::uint32_t steps = 0;
    double drift_x = 0;
    double drift_y = 0;

    std::vector<std::uint8_t> encode() const;
    static Memory decode(std::span<const std::uint8_t> bytes);
  };

  SyntheticTracker(std::shared_ptr<const SyntheticScene> scene, SyntheticTrackerConfig cfg = {});

  const TrackerInfo& info() const override { return info_; }
  TrackerOutput track(const Frame& previous, const Frame& next, std::span<const std::uint8_t> memory,
                      const ProviderHint& hint) override;

 private:
  std::shared_ptr<const SyntheticScene> scene_;
  SyntheticTrackerConfig cfg_;
  TrackerInfo info_;
};

}  // namespace annotrack

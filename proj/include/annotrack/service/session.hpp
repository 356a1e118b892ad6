// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "annotrack/backends/provider.hpp"
#include "annotrack/backends/synthetic.hpp"
#include "annotrack/fuse.hpp"
#include "annotrack/service/config.hpp"
#include "annotrack/store.hpp"
#include "annotrack/track.hpp"

namespace annotrack {

struct Providers {
  std::shared_ptr<DetectorProvider> detector;
  std::shared_ptr<TrackerProvider> tracker;
};

/// How to obtain providers: "synthetic" reads <frames>/ground_truth.json,
/// "pipe" starts `sidecar_command`, "none" runs without providers.
struct BackendOptions {
  std::string kind = "synthetic";
  std::string sidecar_command;
  SyntheticDetectorConfig detector;
  SyntheticTrackerConfig tracker;
};

Providers open_backend(const BackendOptions& options, const std::filesystem::path& frames_dir);

struct FrameOutcome {
  std::size_t frame = 0;    // destination frame
  std::string status;       // tracked | exists | disabled | failed
  std::optional<BBox> box;
  std::optional<FusionReport> fusion;
  std::string message;
};

struct InstanceReport {
  std::string instance_id;
  std::string label;
  std::vector<FrameOutcome> frames;
};

struct TrackReport {
  std::size_t from = 0;
  std::size_t to = 0;
  TrackerVariant variant = TrackerVariant::kBaseline;
  bool cancelled = false;
  std::vector<InstanceReport> instances;
};

nlohmann::json to_json(const TrackReport& report);

struct TrackProgress {
  bool running = false;
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t current = 0;  // last completed destination frame
};

/// One annotation session over a frames directory. All writes to annotation
/// files and to the tracker-state cache go through one mutex.
class Session {
 public:
  Session(std::filesystem::path frames_dir, Providers providers, EngineConfig config = {},
          InstanceIdGenerator::Clock clock = system_epoch_ms);

  const FrameStore& store() const { return store_; }
  std::size_t frame_count() const { return store_.frame_count(); }
  const Providers& providers() const { return providers_; }

  EngineConfig config() const;
  void set_config(const EngineConfig& cfg);

  std::shared_ptr<const Frame> frame(std::size_t index) const;
  FrameAnnotations annotations(std::size_t index) const;
  std::vector<std::size_t> timeline() const;

  /// Quoted strong validator of the frame's annotation file.
  std::string etag(std::size_t index) const;

  /// Replaces the frame's annotations. Throws kConflict when `if_match` is
  /// given and stale. Instances whose box changed or disappeared lose their
  /// tracker state. Returns the new etag.
  std::string put_annotations(std::size_t index, FrameAnnotations annotations,
                              const std::optional<std::string>& if_match = std::nullopt);

  /// Runs auto-annotation on the frame and persists the additions.
  std::vector<Annotation> detect(std::size_t index);

  /// Propagates annotations from `from` to every frame up to `to`.
  TrackReport track_forward(std::size_t from, std::size_t to,
                            const std::optional<std::set<std::string>>& instances = std::nullopt);
  void cancel_tracking() { cancel_.store(true); }
  TrackProgress progress() const;

  /// Sets tracking_enabled on every stored annotation of the instance.
  /// Returns the number of frames changed; throws kNotFound for unknown ids.
  std::size_t set_tracking(const std::string& instance_id, bool enabled);

  bool has_track_state(const std::string& instance_id) const;
  std::optional<TrackState> track_state(const std::string& instance_id) const;

 private:
  void drop_state_locked(const std::string& instance_id);
  TrackState& state_for_locked(const Annotation& ann, std::size_t frame_index);
  std::optional<BBox> propose_locked(const Annotation& ann, std::size_t frame_index,
                                     FrameOutcome& outcome, Provenance& provenance);

  FrameStore store_;
  Providers providers_;
  InstanceIdGenerator ids_;

  mutable std::mutex config_mutex_;
  EngineConfig config_;

  mutable std::mutex write_mutex_;
  std::map<std::string, TrackState> states_;

  mutable std::mutex frame_mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const Frame>> frame_cache_;

  std::atomic<bool> cancel_{false};
  mutable std::mutex progress_mutex_;
  TrackProgress progress_;
};

}  // namespace annotrack

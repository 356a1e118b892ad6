// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "annotrack/backends/protocol.hpp"
#include "annotrack/backends/provider.hpp"

namespace annotrack {

/// A sidecar process speaking annotrack-proto/1 on its stdin/stdout.
/// One request in flight at a time; callers queue on the internal mutex.
/// A dead sidecar is restarted on the next request, which bumps epoch() and
/// invalidates tracker handles from the previous incarnation.
class SidecarProcess {
 public:
  explicit SidecarProcess(std::string command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~SidecarProcess();
  SidecarProcess(const SidecarProcess&) = delete;
  SidecarProcess& operator=(const SidecarProcess&) = delete;

  proto::ResponseBody call(proto::RequestBody body);
  std::uint64_t epoch() const;
  /// Restarts a dead child first, then returns the epoch.
  std::uint64_t live_epoch();
  const proto::DescribeReply& description() const { return description_; }

  /// Kills the child (tests use this to simulate a crash).
  void kill_child();

 private:
  void start_locked();
  void revive_locked();
  void stop_locked();
  std::string read_line_locked();

  std::string command_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  std::uint64_t epoch_ = 0;
  proto::DescribeReply description_;
};

class PipeDetector final : public DetectorProvider {
 public:
  explicit PipeDetector(std::shared_ptr<SidecarProcess> sidecar);
  const DetectorInfo& info() const override { return info_; }
  std::vector<Detection> detect(const Frame& input, const ProviderHint& hint) override;

 private:
  std::shared_ptr<SidecarProcess> sidecar_;
  DetectorInfo info_;
};

/// TrackState memory holds the sidecar's state handle and the sidecar epoch.
class PipeTracker final : public TrackerProvider {
 public:
  explicit PipeTracker(std::shared_ptr<SidecarProcess> sidecar);
  const TrackerInfo& info() const override { return info_; }
  TrackerOutput track(const Frame& previous, const Frame& next, std::span<const std::uint8_t> memory,
                      const ProviderHint& hint) override;
  void release(std::span<const std::uint8_t> memory) override;

 private:
  std::shared_ptr<SidecarProcess> sidecar_;
  TrackerInfo info_;
};

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/backends/pipe.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "annotrack/errors.hpp"

extern char** environ;

namespace annotrack {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kProvider, "sidecar: " + what); }

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(std::string("write failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::uint64_t fresh_epoch() {
  static std::uint64_t counter = 0;
  return (static_cast<std::uint64_t>(::getpid()) << 32) ^
         static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()) ^ ++counter;
}

struct Handle {
  std::uint64_t state;
  std::uint64_t epoch;
};

std::vector<std::uint8_t> encode_handle(Handle h) {
  std::vector<std::uint8_t> bytes(sizeof h);
  std::memcpy(bytes.data(), &h, sizeof h);
  return bytes;
}

Handle decode_handle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != sizeof(Handle)) fail("tracker memory is not a sidecar handle");
  Handle h;
  std::memcpy(&h, bytes.data(), sizeof h);
  return h;
}

template <typename T>
T expect(proto::ResponseBody body) {
  if (auto* err = std::get_if<proto::ErrorReply>(&body)) fail(err->message);
  if (auto* ok = std::get_if<T>(&body)) return std::move(*ok);
  fail("unexpected response type");
}

}  // namespace

SidecarProcess::SidecarProcess(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  std::lock_guard lock(mutex_);
  start_locked();
}

SidecarProcess::~SidecarProcess() {
  std::lock_guard lock(mutex_);
  stop_locked();
}

std::uint64_t SidecarProcess::epoch() const {
  std::lock_guard lock(mutex_);
  return epoch_;
}

void SidecarProcess::start_locked() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0)
    fail(std::string("pipe: ") + std::strerror(errno));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    pid_ = -1;
    fail("cannot start \"" + command_ + "\": " + std::strerror(rc));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
  epoch_ = fresh_epoch();

  const std::uint64_t id = next_id_++;
  write_all(to_child_, proto::encode(proto::Request{id, proto::Describe{}}) + "\n");
  const proto::Response r = proto::decode_response(read_line_locked(), 0);
  if (r.id != id) fail("describe answered with the wrong correlation id");
  description_ = expect<proto::DescribeReply>(r.body);
  if (description_.proto != proto::kVersion) fail("unsupported protocol " + description_.proto);
}

void SidecarProcess::stop_locked() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin lets a well-behaved sidecar exit; give it a moment.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void SidecarProcess::kill_child() {
  std::lock_guard lock(mutex_);
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string SidecarProcess::read_line_locked() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail("timed out waiting for a response");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) fail("timed out waiting for a response");
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail("sidecar closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void SidecarProcess::revive_locked() {
  if (pid_ <= 0 || ::waitpid(pid_, nullptr, WNOHANG) == pid_) {
    pid_ = -1;
    stop_locked();
    start_locked();
  }
}

std::uint64_t SidecarProcess::live_epoch() {
  std::lock_guard lock(mutex_);
  revive_locked();
  return epoch_;
}

proto::ResponseBody SidecarProcess::call(proto::RequestBody body) {
  std::lock_guard lock(mutex_);
  const std::size_t kind = body.index();
  revive_locked();
  const std::uint64_t id = next_id_++;
  try {
    write_all(to_child_, proto::encode(proto::Request{id, std::move(body)}) + "\n");
    const proto::Response r = proto::decode_response(read_line_locked(), kind);
    if (r.id != id) fail("response correlation id " + std::to_string(r.id) + " != " + std::to_string(id));
    return r.body;
  } catch (const Error&) {
    // The stream is out of sync after any transport failure.
    stop_locked();
    throw;
  }
}

PipeDetector::PipeDetector(std::shared_ptr<SidecarProcess> sidecar) : sidecar_(std::move(sidecar)) {
  if (!sidecar_->description().detector) fail("sidecar does not provide a detector");
  info_ = *sidecar_->description().detector;
  info_.validate();
}

std::vector<Detection> PipeDetector::detect(const Frame& input, const ProviderHint& hint) {
  return expect<proto::DetectReply>(sidecar_->call(proto::Detect{input, hint})).detections;
}

PipeTracker::PipeTracker(std::shared_ptr<SidecarProcess> sidecar) : sidecar_(std::move(sidecar)) {
  if (!sidecar_->description().tracker) fail("sidecar does not provide a tracker");
  info_ = *sidecar_->description().tracker;
}

TrackerOutput PipeTracker::track(const Frame& previous, const Frame& next,
                                 std::span<const std::uint8_t> memory, const ProviderHint& hint) {
  if (memory.empty()) {
    const Size2D s = next.size();
    const BBox centered{std::floor(s.w / 4), std::floor(s.h / 4), s.w / 2, s.h / 2};
    const auto reply = expect<proto::TrackInitReply>(sidecar_->call(proto::TrackInit{previous, centered, hint}));
    return {centered, encode_handle({reply.state, sidecar_->epoch()})};
  }
  const Handle h = decode_handle(memory);
  if (h.epoch != sidecar_->live_epoch())
    throw Error(ErrorCode::kStaleState, "sidecar restarted; tracker state must be re-initialized");
  const auto reply = expect<proto::TrackStepReply>(sidecar_->call(proto::TrackStep{h.state, previous, next, hint}));
  return {reply.box, encode_handle(h)};
}

void PipeTracker::release(std::span<const std::uint8_t> memory) {
  if (memory.empty()) return;
  const Handle h = decode_handle(memory);
  if (h.epoch != sidecar_->epoch()) return;
  try {
    sidecar_->call(proto::Release{h.state});
  } catch (const Error&) {
  }
}

}  // namespace annotrack

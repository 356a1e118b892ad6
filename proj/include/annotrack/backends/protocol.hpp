// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// annotrack-proto/1: newline-delimited JSON over a sidecar's stdin/stdout.
//
//   {"id":1,"op":"describe"}
//   {"id":2,"op":"detect","image":{"w":300,"h":300,"rgb_b64":"..."}}
//   {"id":3,"op":"track_init","image":{...},"box":[x,y,w,h]}        -> {"id":3,"state":7}
//   {"id":4,"op":"track_step","state":7,"image_prev":{...},"image_next":{...}} -> {"id":4,"box":[...]}
//   {"id":5,"op":"release","state":7}
//
// Every response echoes "id". Failures come back as {"id":N,"error":"..."}.
// detect/track_init/track_step may carry an optional
// "hint":{"frame":f,"region":[x,y,w,h]} that neural sidecars ignore.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "annotrack/backends/provider.hpp"

namespace annotrack::proto {

inline constexpr const char* kVersion = "annotrack-proto/1";

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct Describe {
  friend bool operator==(const Describe&, const Describe&) = default;
};
struct Detect {
  Frame image;
  ProviderHint hint;
  friend bool operator==(const Detect&, const Detect&) = default;
};
struct TrackInit {
  Frame image;
  BBox box;
  ProviderHint hint;
  friend bool operator==(const TrackInit&, const TrackInit&) = default;
};
struct TrackStep {
  std::uint64_t state = 0;
  Frame image_prev;
  Frame image_next;
  ProviderHint hint;
  friend bool operator==(const TrackStep&, const TrackStep&) = default;
};
struct Release {
  std::uint64_t state = 0;
  friend bool operator==(const Release&, const Release&) = default;
};

using RequestBody = std::variant<Describe, Detect, TrackInit, TrackStep, Release>;

struct Request {
  std::uint64_t id = 0;
  RequestBody body;
  friend bool operator==(const Request&, const Request&) = default;
};

struct DescribeReply {
  std::string proto = kVersion;
  std::optional<DetectorInfo> detector;
  std::optional<TrackerInfo> tracker;
  friend bool operator==(const DescribeReply&, const DescribeReply&) = default;
};
struct DetectReply {
  std::vector<Detection> detections;
  friend bool operator==(const DetectReply&, const DetectReply&) = default;
};
struct TrackInitReply {
  std::uint64_t state = 0;
  friend bool operator==(const TrackInitReply&, const TrackInitReply&) = default;
};
struct TrackStepReply {
  BBox box;
  friend bool operator==(const TrackStepReply&, const TrackStepReply&) = default;
};
struct ReleaseReply {
  friend bool operator==(const ReleaseReply&, const ReleaseReply&) = default;
};
struct ErrorReply {
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using ResponseBody =
    std::variant<DescribeReply, DetectReply, TrackInitReply, TrackStepReply, ReleaseReply, ErrorReply>;

struct Response {
  std::uint64_t id = 0;
  ResponseBody body;
  friend bool operator==(const Response&, const Response&) = default;
};

/// One line, no trailing newline. Decoders throw Error(kProvider) on
/// malformed input.
std::string encode(const Request& request);
std::string encode(const Response& response);
Request decode_request(std::string_view line);
/// Responses are untyped on the wire; `expected` names the request kind the
/// response answers (index into RequestBody).
Response decode_response(std::string_view line, std::size_t expected);

/// Serves requests from `in` until EOF. Either provider may be null; tracker
/// memory stays inside the server, clients get integer handles.
void serve(std::istream& in, std::ostream& out, DetectorProvider* detector, TrackerProvider* tracker);

}  // namespace annotrack::proto

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/backends/protocol.hpp"

#include <array>
#include <istream>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "annotrack/errors.hpp"

namespace annotrack::proto {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::array<const char*, 5> kOps{"describe", "detect", "track_init", "track_step", "release"};

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kProvider, "protocol: " + what);
}

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) bad("box must be [x,y,w,h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json image_json(const Frame& f) {
  return {{"w", f.width()}, {"h", f.height()}, {"rgb_b64", base64_encode(f.bytes())}};
}

Frame image_from(const json& j) {
  const int w = j.at("w").get<int>();
  const int h = j.at("h").get<int>();
  auto rgb = base64_decode(j.at("rgb_b64").get<std::string>());
  if (w < 1 || h < 1 || rgb.size() != static_cast<std::size_t>(w) * h * 3) bad("image size mismatch");
  return Frame(w, h, std::move(rgb));
}

void put_hint(json& j, const ProviderHint& hint) {
  if (!hint.frame && !hint.region) return;
  json h = json::object();
  if (hint.frame) h["frame"] = *hint.frame;
  if (hint.region) h["region"] = box_json(*hint.region);
  j["hint"] = std::move(h);
}

ProviderHint hint_from(const json& j) {
  ProviderHint hint;
  const auto it = j.find("hint");
  if (it == j.end()) return hint;
  if (it->contains("frame")) hint.frame = it->at("frame").get<std::size_t>();
  if (it->contains("region")) hint.region = box_from(it->at("region"));
  return hint;
}

json size_json(const Size2D& s) { return json::array({s.w, s.h}); }
Size2D size_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <typename F>
auto guarded(std::string_view line, F&& f) {
  try {
    return f(json::parse(line));
  } catch (const json::exception& e) {
    bad(std::string("malformed message: ") + e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    const std::uint32_t v = (bytes[i] << 16) | (rest == 2 ? bytes[i + 1] << 8 : 0);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t;
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0) bad("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        if (pad) bad("base64 padding in the middle");
        v[k] = table[static_cast<unsigned char>(c)];
        if (v[k] < 0) bad("invalid base64 character");
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(w >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(w));
  }
  return out;
}

std::string encode(const Request& request) {
  json j = {{"id", request.id}, {"op", kOps[request.body.index()]}};
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Detect>) {
          j["image"] = image_json(body.image);
          put_hint(j, body.hint);
        } else if constexpr (std::is_same_v<T, TrackInit>) {
          j["image"] = image_json(body.image);
          j["box"] = box_json(body.box);
          put_hint(j, body.hint);
        } else if constexpr (std::is_same_v<T, TrackStep>) {
          j["state"] = body.state;
          j["image_prev"] = image_json(body.image_prev);
          j["image_next"] = image_json(body.image_next);
          put_hint(j, body.hint);
        } else if constexpr (std::is_same_v<T, Release>) {
          j["state"] = body.state;
        }
      },
      request.body);
  return j.dump();
}

Request decode_request(std::string_view line) {
  return guarded(line, [](const json& j) {
    Request r;
    r.id = j.at("id").get<std::uint64_t>();
    const std::string op = j.at("op").get<std::string>();
    if (op == "describe") {
      r.body = Describe{};
    } else if (op == "detect") {
      r.body = Detect{image_from(j.at("image")), hint_from(j)};
    } else if (op == "track_init") {
      r.body = TrackInit{image_from(j.at("image")), box_from(j.at("box")), hint_from(j)};
    } else if (op == "track_step") {
      r.body = TrackStep{j.at("state").get<std::uint64_t>(), image_from(j.at("image_prev")),
                         image_from(j.at("image_next")), hint_from(j)};
    } else if (op == "release") {
      r.body = Release{j.at("state").get<std::uint64_t>()};
    } else {
      bad("unknown op \"" + op + "\"");
    }
    return r;
  });
}

std::string encode(const Response& response) {
  json j = {{"id", response.id}};
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, DescribeReply>) {
          j["proto"] = body.proto;
          if (body.detector) {
            j["detector"] = {{"input_size", size_json(body.detector->input_size)},
                             {"classes", body.detector->class_names},
                             {"default_confidence", body.detector->default_confidence}};
          }
          if (body.tracker) j["tracker"] = {{"input_size", size_json(body.tracker->input_size)}};
        } else if constexpr (std::is_same_v<T, DetectReply>) {
          json dets = json::array();
          for (const Detection& d : body.detections)
            dets.push_back({{"box", box_json(d.box)}, {"scores", d.scores}});
          j["detections"] = std::move(dets);
        } else if constexpr (std::is_same_v<T, TrackInitReply>) {
          j["state"] = body.state;
        } else if constexpr (std::is_same_v<T, TrackStepReply>) {
          j["box"] = box_json(body.box);
        } else if constexpr (std::is_same_v<T, ReleaseReply>) {
          j["ok"] = true;
        } else if constexpr (std::is_same_v<T, ErrorReply>) {
          j["error"] = body.message;
        }
      },
      response.body);
  return j.dump();
}

Response decode_response(std::string_view line, std::size_t expected) {
  return guarded(line, [expected](const json& j) {
    Response r;
    r.id = j.at("id").get<std::uint64_t>();
    if (j.contains("error")) {
      r.body = ErrorReply{j.at("error").get<std::string>()};
      return r;
    }
    switch (expected) {
      case 0: {
        DescribeReply d;
        d.proto = j.at("proto").get<std::string>();
        if (j.contains("detector")) {
          const json& dj = j.at("detector");
          DetectorInfo info;
          info.input_size = size_from(dj.at("input_size"));
          info.class_names = dj.at("classes").get<std::vector<std::string>>();
          info.default_confidence = dj.value("default_confidence", 0.5);
          d.detector = std::move(info);
        }
        if (j.contains("tracker")) d.tracker = TrackerInfo{size_from(j.at("tracker").at("input_size"))};
        r.body = std::move(d);
        break;
      }
      case 1: {
        DetectReply d;
        for (const json& e : j.at("detections"))
          d.detections.push_back({box_from(e.at("box")), e.at("scores").get<std::vector<double>>()});
        r.body = std::move(d);
        break;
      }
      case 2: r.body = TrackInitReply{j.at("state").get<std::uint64_t>()}; break;
      case 3: r.body = TrackStepReply{box_from(j.at("box"))}; break;
      case 4: r.body = ReleaseReply{}; break;
      default: bad("unknown response kind");
    }
    return r;
  });
}

void serve(std::istream& in, std::ostream& out, DetectorProvider* detector, TrackerProvider* tracker) {
  std::map<std::uint64_t, std::vector<std::uint8_t>> states;
  std::uint64_t next_state = 1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Response response;
    try {
      const Request request = decode_request(line);
      response.id = request.id;
      response.body = std::visit(
          [&](const auto& body) -> ResponseBody {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, Describe>) {
              DescribeReply d;
              if (detector) d.detector = detector->info();
              if (tracker) d.tracker = tracker->info();
              return d;
            } else if constexpr (std::is_same_v<T, Detect>) {
              if (!detector) return ErrorReply{"no detector configured"};
              return DetectReply{detector->detect(body.image, body.hint)};
            } else if constexpr (std::is_same_v<T, TrackInit>) {
              if (!tracker) return ErrorReply{"no tracker configured"};
              TrackerOutput o = tracker->track(body.image, body.image, {}, body.hint);
              states[next_state] = std::move(o.memory);
              return TrackInitReply{next_state++};
            } else if constexpr (std::is_same_v<T, TrackStep>) {
              if (!tracker) return ErrorReply{"no tracker configured"};
              const auto it = states.find(body.state);
              if (it == states.end()) return ErrorReply{"unknown state " + std::to_string(body.state)};
              TrackerOutput o = tracker->track(body.image_prev, body.image_next, it->second, body.hint);
              it->second = std::move(o.memory);
              return TrackStepReply{o.box};
            } else {
              const auto it = states.find(body.state);
              if (it != states.end()) {
                if (tracker) tracker->release(it->second);
                states.erase(it);
              }
              return ReleaseReply{};
            }
          },
          request.body);
    } catch (const std::exception& e) {
      response.body = ErrorReply{e.what()};
    }
    out << encode(response) << '\n' << std::flush;
  }
}

}  // namespace annotrack::proto

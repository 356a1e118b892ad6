// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/backends/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "annotrack/errors.hpp"
#include "annotrack/image_io.hpp"
#include "annotrack/store.hpp"

namespace annotrack {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

constexpr std::array<Rgb, 8> kPalette{{
    {230, 25, 75}, {60, 180, 75}, {255, 225, 25}, {0, 130, 200},
    {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230},
}};

BBox centered_box(const BBox& region) {
  return {region.x + std::floor(region.w / 4), region.y + std::floor(region.h / 4), region.w / 2,
          region.h / 2};
}

[[noreturn]] void provider_error(const std::string& what) {
  throw Error(ErrorCode::kProvider, "synthetic provider: " + what);
}

}  // namespace

SyntheticScene::SyntheticScene(std::uint64_t seed, SceneSpec spec)
    : seed_(seed),
      frame_size_(spec.frame_size),
      frame_count_(spec.frame_count),
      class_names_(std::move(spec.class_names)) {
  if (!frame_size_.valid() || frame_count_ < 1)
    throw Error(ErrorCode::kSpecInconsistency, "scene needs a positive frame size and >= 1 frame");
  for (const ObjectSpec& o : spec.objects) {
    if (o.start.w > frame_size_.w || o.start.h > frame_size_.h)
      throw Error(ErrorCode::kSpecInconsistency, "object larger than the frame");
    if (o.class_id < 0 || o.class_id >= static_cast<int>(class_names_.size()))
      throw Error(ErrorCode::kSpecInconsistency, "object class id out of range");
    SceneObject obj{o.class_id, o.color, {}};
    obj.trajectory.reserve(frame_count_);
    for (std::size_t f = 0; f < frame_count_; ++f) {
      const double t = double(f);
      const double phase = o.period > 0 ? std::sin(2 * std::numbers::pi * t / o.period) : 0.0;
      obj.trajectory.push_back({std::round(o.start.x + o.velocity.x() * t + o.amplitude.x() * phase),
                                std::round(o.start.y + o.velocity.y() * t + o.amplitude.y() * phase),
                                std::round(o.start.w), std::round(o.start.h)});
    }
    objects_.push_back(std::move(obj));
  }
  check_consistency();
}

void SyntheticScene::check_consistency() const {
  const BBox bounds{0, 0, frame_size_.w, frame_size_.h};
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    for (std::size_t f = 0; f < frame_count_; ++f) {
      const BBox& b = objects_[i].trajectory[f];
      if (b.w < 1 || b.h < 1) throw Error(ErrorCode::kSpecInconsistency, "object smaller than a pixel");
      if (!contains(bounds, b)) {
        std::ostringstream msg;
        msg << "object " << i << " leaves the frame at frame " << f << ": " << b;
        throw Error(ErrorCode::kSpecInconsistency, msg.str());
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (iou(b, objects_[j].trajectory[f]) >= 0.1) {
          std::ostringstream msg;
          msg << "objects " << j << " and " << i << " overlap at frame " << f;
          throw Error(ErrorCode::kSpecInconsistency, msg.str());
        }
      }
    }
  }
}

const BBox& SyntheticScene::truth(std::size_t object, std::size_t frame) const {
  if (object >= objects_.size() || frame >= frame_count_)
    throw Error(ErrorCode::kInvalidArgument, "ground-truth lookup out of range");
  return objects_[object].trajectory[frame];
}

Frame SyntheticScene::render(std::size_t frame) const {
  if (frame >= frame_count_) throw Error(ErrorCode::kInvalidArgument, "frame out of range");
  const int w = static_cast<int>(frame_size_.w);
  const int h = static_cast<int>(frame_size_.h);
  Frame out(w, h);
  // Static 4x4-block noise texture; the background never moves.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint64_t r = mix(seed_, (std::uint64_t(y / 4) << 32) | std::uint64_t(x / 4));
      const auto base = static_cast<std::uint8_t>(70 + (r & 31));
      out.set(x, y, {base, static_cast<std::uint8_t>(base + ((r >> 8) & 15)),
                     static_cast<std::uint8_t>(base + ((r >> 16) & 15))});
    }
  }
  for (const SceneObject& obj : objects_) {
    const BBox& b = obj.trajectory[frame];
    for (int y = int(b.y); y < int(b.bottom()); ++y)
      for (int x = int(b.x); x < int(b.right()); ++x) out.set(x, y, obj.color);
  }
  return out;
}

std::vector<Frame> SyntheticScene::render_all() const {
  std::vector<Frame> frames;
  frames.reserve(frame_count_);
  for (std::size_t f = 0; f < frame_count_; ++f) frames.push_back(render(f));
  return frames;
}

nlohmann::json SyntheticScene::to_json() const {
  nlohmann::json objects = nlohmann::json::array();
  for (const SceneObject& o : objects_) {
    nlohmann::json traj = nlohmann::json::array();
    for (const BBox& b : o.trajectory) traj.push_back({b.x, b.y, b.w, b.h});
    objects.push_back({{"class_id", o.class_id},
                       {"color", {o.color[0], o.color[1], o.color[2]}},
                       {"trajectory", std::move(traj)}});
  }
  return {{"seed", seed_},
          {"frame_size", {frame_size_.w, frame_size_.h}},
          {"frame_count", frame_count_},
          {"class_names", class_names_},
          {"objects", std::move(objects)}};
}

SyntheticScene SyntheticScene::from_json(const nlohmann::json& doc) {
  try {
    SyntheticScene scene;
    scene.seed_ = doc.at("seed").get<std::uint64_t>();
    scene.frame_size_ = {doc.at("frame_size").at(0).get<double>(), doc.at("frame_size").at(1).get<double>()};
    scene.frame_count_ = doc.at("frame_count").get<std::size_t>();
    scene.class_names_ = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& o : doc.at("objects")) {
      SceneObject obj;
      obj.class_id = o.at("class_id").get<int>();
      const auto c = o.at("color").get<std::array<int, 3>>();
      obj.color = {std::uint8_t(c[0]), std::uint8_t(c[1]), std::uint8_t(c[2])};
      for (const auto& b : o.at("trajectory"))
        obj.trajectory.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                  b.at(3).get<double>()});
      if (obj.trajectory.size() != scene.frame_count_)
        throw Error(ErrorCode::kSpecInconsistency, "trajectory length differs from frame count");
      scene.objects_.push_back(std::move(obj));
    }
    scene.check_consistency();
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("ground truth: ") + e.what());
  }
}

SyntheticScene SyntheticScene::load(const std::filesystem::path& ground_truth_file) {
  std::ifstream in(ground_truth_file);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + ground_truth_file.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile, ground_truth_file.string() + ": " + e.what());
  }
}

SceneSpec random_scene_spec(std::uint64_t seed, const Size2D& frame_size, std::size_t frame_count,
                            std::size_t object_count, double min_side, double max_side,
                            double max_speed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneSpec spec;
  spec.frame_size = frame_size;
  spec.frame_count = frame_count;

  std::vector<ObjectSpec> placed;
  for (std::size_t n = 0; n < object_count; ++n) {
    bool ok = false;
    for (int attempt = 0; attempt < 5000 && !ok; ++attempt) {
      ObjectSpec o;
      o.class_id = static_cast<int>(rng() % spec.class_names.size());
      o.color = kPalette[n % kPalette.size()];
      const double w = 2 * std::round((min_side + unit(rng) * (max_side - min_side)) / 2);
      const double h = 2 * std::round((min_side + unit(rng) * (max_side - min_side)) / 2);
      o.start = {std::round(unit(rng) * (frame_size.w - w)), std::round(unit(rng) * (frame_size.h - h)), w, h};
      o.velocity = {(2 * unit(rng) - 1) * max_speed, (2 * unit(rng) - 1) * max_speed};
      o.amplitude = {std::round(unit(rng) * 6), std::round(unit(rng) * 6)};
      o.period = 10 + std::round(unit(rng) * 30);

      std::vector<ObjectSpec> trial = placed;
      trial.push_back(o);
      SceneSpec candidate = spec;
      candidate.objects = trial;
      // Require a clear gap between objects, stricter than the scene invariant.
      for (auto& t : candidate.objects) {
        t.start = {t.start.x - 6, t.start.y - 6, t.start.w + 12, t.start.h + 12};
      }
      try {
        const SyntheticScene padded(seed, candidate);
        bool disjoint = true;
        for (std::size_t f = 0; f < frame_count && disjoint; ++f)
          for (std::size_t i = 0; i + 1 < trial.size() && disjoint; ++i)
            disjoint = intersection(padded.truth(i, f), padded.truth(trial.size() - 1, f)).area() == 0;
        ok = disjoint;
      } catch (const Error&) {
        ok = false;
      }
      if (ok) placed.push_back(o);
    }
    if (!ok) throw Error(ErrorCode::kSpecInconsistency, "cannot place " + std::to_string(object_count) + " disjoint objects");
  }
  spec.objects = std::move(placed);
  return spec;
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t f = 0; f < scene.frame_count(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", f);
    save_png(scene.render(f), dir / name);
  }
  write_file_atomic(dir / kGroundTruthFileName, scene.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------

SyntheticDetector::SyntheticDetector(std::shared_ptr<const SyntheticScene> scene,
                                     SyntheticDetectorConfig cfg)
    : scene_(std::move(scene)), cfg_(cfg) {
  info_.input_size = cfg_.input_size;
  info_.class_names = scene_->class_names();
  info_.default_confidence = 0.5;
  info_.validate();
}

std::vector<Detection> SyntheticDetector::detect(const Frame& input, const ProviderHint& hint) {
  if (cfg_.mode == SyntheticDetectorMode::kNone) return {};
  if (!hint.frame || !hint.region) provider_error("detect needs a frame/region hint");
  if (*hint.frame >= scene_->frame_count()) provider_error("frame index out of range");
  const BBox& region = *hint.region;
  const std::size_t classes = scene_->class_names().size();

  std::vector<Detection> out;
  for (std::size_t i = 0; i < scene_->objects().size(); ++i) {
    BBox box = scene_->truth(i, *hint.frame);
    if (intersection(box, region).area() < cfg_.min_contained * box.area()) continue;
    if (cfg_.mode == SyntheticDetectorMode::kNoisy) {
      std::mt19937_64 rng(mix(mix(cfg_.seed, *hint.frame), i));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, cfg_.sigma);
      if (unit(rng) < cfg_.p_miss) continue;
      box.x += noise(rng);
      box.y += noise(rng);
    }
    Detection det;
    det.box = map_between_scales(map_into_crop(box, region), region.size(), input.size());
    det.scores.assign(classes, 0.0);
    det.scores[static_cast<std::size_t>(scene_->objects()[i].class_id)] = cfg_.confidence;
    out.push_back(std::move(det));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> SyntheticTracker::Memory::encode() const {
  std::vector<std::uint8_t> bytes(sizeof object + sizeof steps + 2 * sizeof(double));
  std::uint8_t* p = bytes.data();
  std::memcpy(p, &object, sizeof object);
  p += sizeof object;
  std::memcpy(p, &steps, sizeof steps);
  p += sizeof steps;
  std::memcpy(p, &drift_x, sizeof drift_x);
  p += sizeof drift_x;
  std::memcpy(p, &drift_y, sizeof drift_y);
  return bytes;
}

SyntheticTracker::Memory SyntheticTracker::Memory::decode(std::span<const std::uint8_t> bytes) {
  Memory m;
  if (bytes.size() != sizeof m.object + sizeof m.steps + 2 * sizeof(double))
    provider_error("tracker memory has the wrong size");
  const std::uint8_t* p = bytes.data();
  std::memcpy(&m.object, p, sizeof m.object);
  p += sizeof m.object;
  std::memcpy(&m.steps, p, sizeof m.steps);
  p += sizeof m.steps;
  std::memcpy(&m.drift_x, p, sizeof m.drift_x);
  p += sizeof m.drift_x;
  std::memcpy(&m.drift_y, p, sizeof m.drift_y);
  return m;
}

SyntheticTracker::SyntheticTracker(std::shared_ptr<const SyntheticScene> scene, SyntheticTrackerConfig cfg)
    : scene_(std::move(scene)), cfg_(cfg) {
  info_.input_size = cfg_.input_size;
}

TrackerOutput SyntheticTracker::track(const Frame& previous, const Frame& next,
                                      std::span<const std::uint8_t> memory, const ProviderHint& hint) {
  if (!hint.frame || !hint.region) provider_error("track needs a frame/region hint");
  const std::size_t f = *hint.frame;
  if (f >= scene_->frame_count()) provider_error("frame index out of range");
  const BBox& region = *hint.region;
  const auto to_input = [&](const BBox& b) {
    return map_between_scales(map_into_crop(b, region), region.size(), next.size());
  };
  (void)previous;

  if (memory.empty()) {
    const BBox center = centered_box(region);
    Memory m;
    double best = 0.0;
    for (std::size_t i = 0; i < scene_->objects().size(); ++i) {
      const double overlap = iou(scene_->truth(i, f), center);
      if (overlap > best) {
        best = overlap;
        m.object = static_cast<std::int32_t>(i);
      }
    }
    if (m.object < 0) provider_error("no object near the crop center");
    return {to_input(center), m.encode()};
  }

  Memory m = Memory::decode(memory);
  if (m.object < 0 || static_cast<std::size_t>(m.object) >= scene_->objects().size())
    provider_error("tracker memory references an unknown object");
  if (f + 1 >= scene_->frame_count()) provider_error("no frame after " + std::to_string(f));
  const BBox& before = scene_->truth(static_cast<std::size_t>(m.object), f);
  const BBox& after = scene_->truth(static_cast<std::size_t>(m.object), f + 1);

  BBox out = after;
  if (cfg_.mode == SyntheticTrackerMode::kDrifting) {
    const BBox c = centered_box(region);
    out = {c.x + (after.x - before.x) + cfg_.bias.x(), c.y + (after.y - before.y) + cfg_.bias.y(),
           c.w + (after.w - before.w), c.h + (after.h - before.h)};
    m.drift_x += cfg_.bias.x();
    m.drift_y += cfg_.bias.y();
  }
  ++m.steps;
  return {to_input(out), m.encode()};
}

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/service/session.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "annotrack/backends/pipe.hpp"
#include "annotrack/detect.hpp"
#include "annotrack/errors.hpp"
#include "annotrack/image_io.hpp"

namespace annotrack {

namespace fs = std::filesystem;
using nlohmann::json;

Providers open_backend(const BackendOptions& options, const fs::path& frames_dir) {
  if (options.kind == "none") return {};
  if (options.kind == "synthetic") {
    const fs::path gt = frames_dir / kGroundTruthFileName;
    if (!fs::exists(gt))
      throw Error(ErrorCode::kProvider, "synthetic backend needs " + gt.string());
    auto scene = std::make_shared<const SyntheticScene>(SyntheticScene::load(gt));
    return {std::make_shared<SyntheticDetector>(scene, options.detector),
            std::make_shared<SyntheticTracker>(scene, options.tracker)};
  }
  if (options.kind == "pipe") {
    if (options.sidecar_command.empty())
      throw Error(ErrorCode::kInvalidArgument, "pipe backend needs a sidecar command");
    auto sidecar = std::make_shared<SidecarProcess>(options.sidecar_command);
    Providers p;
    if (sidecar->description().detector) p.detector = std::make_shared<PipeDetector>(sidecar);
    if (sidecar->description().tracker) p.tracker = std::make_shared<PipeTracker>(sidecar);
    return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown backend \"" + options.kind + "\"");
}

namespace {

json box_json(const BBox& b) {
  return json::array({round_to_cents(b.x), round_to_cents(b.y), round_to_cents(b.w), round_to_cents(b.h)});
}

std::string fnv1a_etag(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "\"%016llx\"", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

json to_json(const TrackReport& report) {
  json instances = json::array();
  for (const InstanceReport& inst : report.instances) {
    json frames = json::array();
    for (const FrameOutcome& o : inst.frames) {
      json f = {{"frame", o.frame}, {"status", o.status}};
      if (o.box) f["box"] = box_json(*o.box);
      if (o.fusion) {
        json fr = {{"gate_fired", o.fusion->gate_fired},
                   {"iou", std::round(o.fusion->iou * 1e4) / 1e4},
                   {"tracker_box", box_json(o.fusion->tracker_box)},
                   {"detector_failed", o.fusion->detector_failed}};
        if (o.fusion->detector_box) fr["detector_box"] = box_json(*o.fusion->detector_box);
        if (!o.fusion->warning.empty()) fr["warning"] = o.fusion->warning;
        f["fusion"] = std::move(fr);
      }
      if (!o.message.empty()) f["message"] = o.message;
      frames.push_back(std::move(f));
    }
    instances.push_back({{"instance_id", inst.instance_id}, {"label", inst.label}, {"frames", std::move(frames)}});
  }
  return {{"from", report.from},
          {"to", report.to},
          {"variant", std::string(to_string(report.variant))},
          {"cancelled", report.cancelled},
          {"instances", std::move(instances)}};
}

Session::Session(fs::path frames_dir, Providers providers, EngineConfig config,
                 InstanceIdGenerator::Clock clock)
    : store_(std::move(frames_dir)), providers_(std::move(providers)), ids_(std::move(clock)),
      config_(config) {
  config_.validate();
  if (store_.frame_count() == 0)
    throw Error(ErrorCode::kInvalidArgument, "no frames in " + store_.dir().string());
}

EngineConfig Session::config() const {
  std::lock_guard lock(config_mutex_);
  return config_;
}

void Session::set_config(const EngineConfig& cfg) {
  cfg.validate();
  std::lock_guard lock(config_mutex_);
  config_ = cfg;
}

std::shared_ptr<const Frame> Session::frame(std::size_t index) const {
  if (index >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(index) + " does not exist");
  std::lock_guard lock(frame_mutex_);
  if (const auto it = frame_cache_.find(index); it != frame_cache_.end()) return it->second;
  if (frame_cache_.size() >= 16) frame_cache_.clear();
  auto loaded = std::make_shared<const Frame>(load_image(store_.image_path(index)));
  frame_cache_.emplace(index, loaded);
  return loaded;
}

FrameAnnotations Session::annotations(std::size_t index) const {
  if (index >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(index) + " does not exist");
  return store_.load(index);
}

std::vector<std::size_t> Session::timeline() const { return store_.annotated_frames(); }

std::string Session::etag(std::size_t index) const {
  if (index >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(index) + " does not exist");
  if (!store_.has_annotations(index)) return "\"absent\"";
  return fnv1a_etag(read_bytes(store_.annotation_path(index)));
}

std::string Session::put_annotations(std::size_t index, FrameAnnotations incoming,
                                     const std::optional<std::string>& if_match) {
  if (index >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(index) + " does not exist");
  std::lock_guard lock(write_mutex_);
  if (if_match && *if_match != "*" && *if_match != etag(index))
    throw Error(ErrorCode::kConflict, "annotations of frame " + std::to_string(index) + " changed");

  const FrameAnnotations before = store_.load(index);
  incoming.frame_index = index;
  incoming.image_path = store_.image_name(index);
  incoming.image_size = before.image_size;
  // parse(serialize(x)) is the schema check and the normalization in one
  const std::string origin = store_.annotation_path(index).filename().string();
  FrameAnnotations next = parse_frame_annotations(serialize(incoming), origin, index);

  for (const Annotation& old : before.annotations) {
    const Annotation* now = next.find(old.label.instance_id);
    if (!now || now->box != old.box) drop_state_locked(old.label.instance_id);
  }
  store_.save(next);
  return etag(index);
}

std::vector<Annotation> Session::detect(std::size_t index) {
  if (index >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(index) + " does not exist");
  if (!providers_.detector) throw Error(ErrorCode::kProvider, "no detector configured");
  const EngineConfig cfg = config();
  const auto image = frame(index);
  std::lock_guard lock(write_mutex_);
  FrameAnnotations current = store_.load(index);
  std::vector<Annotation> added =
      auto_annotate(index, *image, current.annotations, *providers_.detector, cfg.detect, ids_);
  current.annotations.insert(current.annotations.end(), added.begin(), added.end());
  store_.save(current);
  return added;
}

void Session::drop_state_locked(const std::string& instance_id) {
  const auto it = states_.find(instance_id);
  if (it == states_.end()) return;
  if (providers_.tracker) {
    try {
      providers_.tracker->release(it->second.memory);
    } catch (const Error&) {
    }
  }
  states_.erase(it);
}

TrackState& Session::state_for_locked(const Annotation& ann, std::size_t frame_index) {
  const std::string& id = ann.label.instance_id;
  if (auto it = states_.find(id); it != states_.end() && it->second.last_frame == frame_index)
    return it->second;
  drop_state_locked(id);
  TrackState fresh = track_init(*frame(frame_index), frame_index, ann, *providers_.tracker);
  return states_[id] = std::move(fresh);
}

std::optional<BBox> Session::propose_locked(const Annotation& ann, std::size_t frame_index,
                                            FrameOutcome& outcome, Provenance& provenance) {
  const EngineConfig cfg = config();
  if (cfg.variant == TrackerVariant::kBaseline) {
    provenance = Provenance::kTracked;
    return ann.box;
  }
  if (!providers_.tracker) throw Error(ErrorCode::kProvider, "no tracker configured");
  if (cfg.variant == TrackerVariant::kFused && !providers_.detector)
    throw Error(ErrorCode::kProvider, "no detector configured");

  const auto cur = frame(frame_index);
  const auto nxt = frame(frame_index + 1);
  TrackState& state = state_for_locked(ann, frame_index);
  if (cfg.variant == TrackerVariant::kTrackerOnly) {
    TrackStepResult r = track_step(*cur, *nxt, frame_index, ann, state, *providers_.tracker);
    state = std::move(r.state);
    provenance = Provenance::kTracked;
    return r.proposal;
  }
  FusedStepResult r = fused_step(*cur, *nxt, frame_index, ann, state, *providers_.tracker,
                                 *providers_.detector, cfg.fusion);
  state = std::move(r.state);
  provenance = r.report.gate_fired ? Provenance::kFused : Provenance::kTracked;
  outcome.fusion = r.report;
  if (!r.report.warning.empty()) outcome.message = r.report.warning;
  return r.proposal;
}

TrackReport Session::track_forward(std::size_t from, std::size_t to,
                                   const std::optional<std::set<std::string>>& instances) {
  if (from >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(from) + " does not exist");
  if (to >= frame_count())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(to) + " does not exist");
  if (to <= from) throw Error(ErrorCode::kInvalidArgument, "track range must run forward");
  if (!store_.has_annotations(from))
    throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(from) + " is not annotated");

  TrackReport report;
  report.from = from;
  report.to = to;
  report.variant = config().variant;
  cancel_.store(false);
  {
    std::lock_guard lock(progress_mutex_);
    progress_ = {true, from, to, from};
  }

  std::lock_guard lock(write_mutex_);
  FrameAnnotations current = store_.load(from);
  std::vector<std::string> live;
  for (const Annotation& a : current.annotations) {
    if (instances && !instances->count(a.label.instance_id)) continue;
    live.push_back(a.label.instance_id);
    report.instances.push_back({a.label.instance_id, a.label.render(), {}});
  }
  const auto report_for = [&](const std::string& id) -> InstanceReport& {
    for (InstanceReport& r : report.instances)
      if (r.instance_id == id) return r;
    throw Error(ErrorCode::kInvalidArgument, "unknown instance " + id);
  };
  if (instances) {
    for (const std::string& id : *instances)
      if (!current.find(id))
        throw Error(ErrorCode::kNotFound, "instance " + id + " is not annotated in frame " +
                                               std::to_string(from));
  }

  for (std::size_t f = from; f < to && !live.empty(); ++f) {
    if (cancel_.load()) {
      report.cancelled = true;
      break;
    }
    FrameAnnotations next = store_.load(f + 1);
    bool changed = false;
    std::vector<std::string> still_live;
    for (const std::string& id : live) {
      InstanceReport& rep = report_for(id);
      const Annotation* ann = current.find(id);
      if (!ann) continue;
      FrameOutcome outcome;
      outcome.frame = f + 1;
      if (!ann->tracking_enabled) {
        outcome.status = "disabled";
        rep.frames.push_back(std::move(outcome));
        continue;
      }
      if (const Annotation* have = next.find(id)) {
        outcome.status = "exists";
        outcome.box = have->box;
        rep.frames.push_back(std::move(outcome));
        still_live.push_back(id);
        continue;
      }
      try {
        Provenance provenance = Provenance::kTracked;
        const std::optional<BBox> proposal = propose_locked(*ann, f, outcome, provenance);
        Annotation out = *ann;
        out.box = *proposal;
        out.provenance = provenance;
        if (ann->polygon) out.polygon = rescale_polygon(*ann->polygon, ann->box, out.box);
        next.annotations.push_back(std::move(out));
        outcome.status = "tracked";
        outcome.box = proposal;
        changed = true;
        still_live.push_back(id);
      } catch (const Error& e) {
        outcome.status = "failed";
        outcome.message = std::string(to_string(e.code())) + ": " + e.what();
        drop_state_locked(id);
      }
      rep.frames.push_back(std::move(outcome));
    }
    if (changed) {
      store_.save(next);
      next = store_.load(f + 1);
    }
    current = std::move(next);
    live = std::move(still_live);
    std::lock_guard plock(progress_mutex_);
    progress_.current = f + 1;
  }

  std::lock_guard plock(progress_mutex_);
  progress_.running = false;
  return report;
}

TrackProgress Session::progress() const {
  std::lock_guard lock(progress_mutex_);
  return progress_;
}

std::size_t Session::set_tracking(const std::string& instance_id, bool enabled) {
  std::lock_guard lock(write_mutex_);
  std::size_t seen = 0;
  std::size_t changed = 0;
  for (std::size_t f : store_.annotated_frames()) {
    FrameAnnotations fa = store_.load(f);
    Annotation* a = fa.find(instance_id);
    if (!a) continue;
    ++seen;
    if (a->tracking_enabled == enabled) continue;
    a->tracking_enabled = enabled;
    store_.save(fa);
    ++changed;
  }
  if (seen == 0) throw Error(ErrorCode::kNotFound, "unknown instance " + instance_id);
  if (!enabled) drop_state_locked(instance_id);
  return changed;
}

bool Session::has_track_state(const std::string& instance_id) const {
  std::lock_guard lock(write_mutex_);
  return states_.count(instance_id) != 0;
}

std::optional<TrackState> Session::track_state(const std::string& instance_id) const {
  std::lock_guard lock(write_mutex_);
  const auto it = states_.find(instance_id);
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "annotrack/backends/synthetic.hpp"
#include "annotrack/detect.hpp"
#include "annotrack/errors.hpp"
#include "annotrack/fuse.hpp"
#include "annotrack/image_io.hpp"
#include "annotrack/nms.hpp"
#include "annotrack/service/http_server.hpp"
#include "annotrack/service/session.hpp"
#include "annotrack/tiling.hpp"
#include "annotrack/track.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

namespace annotrack {
namespace {

using nlohmann::json;
using testing::TempDir;

// Collects failures and notes for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& n : notes_) os << " " << n << ";";
    if (failed_) {
      os << " " << failed_ << " failure(s):";
      for (const auto& f : failures_) os << " [" << f << "]";
    }
    return os.str();
  }

 private:
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string str(const BBox& b) {
  std::ostringstream os;
  os << b;
  return os.str();
}

// ---------------------------------------------------------------------------

void five_box_example(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  // width-10 boxes of equal height: offset 3 gives IOU 7/13, offset 6 gives 4/16
  const std::vector<ScoredBox> cand{{{0, 0, 10, 10}, 0.8, 0, -1},
                                    {{6, 0, 10, 10}, 0.9, 0, -1},
                                    {{3, 0, 10, 10}, 0.6, 0, -1},
                                    {{100, 100, 10, 10}, 0.5, 0, -1},
                                    {{-3, 0, 10, 10}, 0.3, 0, -1}};
  std::vector<BBox> boxes;
  Eigen::VectorXd q(5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    boxes.push_back(cand[std::size_t(i)].box);
    q[i] = cand[std::size_t(i)].score;
  }
  Eigen::Matrix<bool, 5, 5> d;
  d << 1, 0, 1, 0, 1,
       0, 1, 1, 0, 0,
       1, 1, 1, 0, 0,
       0, 0, 0, 1, 0,
       1, 0, 0, 0, 1;
  const BoolMatrix D = overlap_matrix(iou_matrix(boxes), 0.5);
  c.expect(D.matrix() == d, "D structure");
  Eigen::MatrixXd dhat(5, 5);
  dhat << 0.8, 0, 0.6, 0, 0.3,
          0, 0.9, 0.6, 0, 0,
          0.8, 0.9, 0.6, 0, 0,
          0, 0, 0, 0.5, 0,
          0.8, 0, 0, 0, 0.3;
  c.expect(scaled_overlap(D, q) == dhat, "D-hat entrywise");
  const auto kept = matrix_nms(cand, {});
  c.expect(kept.size() == 3 && kept[0] == cand[1] && kept[1] == cand[0] && kept[2] == cand[3], "kept {b0,b1,b3}");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 1.0, "runtime " + fmt(secs) + " s");
  c.note("kept " + std::to_string(kept.size()) + " boxes in " + fmt(secs * 1e3) + " ms");
}

void nms_oracle(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    const int classes = std::uniform_int_distribution<int>(1, 3)(rng);
    auto cand = oracle::clustered_boxes(rng, n, classes);
    const auto kept = matrix_nms(cand, {});
    auto expected = oracle::loop_nms(cand, 0.5, 5000);
    std::stable_sort(expected.begin(), expected.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.class_id < b.class_id; });
    c.expect(kept == expected, "oracle mismatch seed " + std::to_string(seed));
    std::shuffle(cand.begin(), cand.end(), rng);
    c.expect(matrix_nms(cand, {}) == kept, "permutation changed result seed " + std::to_string(seed));
    total += n;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s");
  c.note("500 instances, " + std::to_string(total) + " candidates, " + fmt(secs) + " s");
}

void geometry(Check& c) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> eighths(-8 * 4096, 8 * 4096), positive(8, 8 * 4096);
  const auto coord = [&] { return eighths(rng) / 8.0; };
  const auto extent = [&] { return positive(rng) / 8.0; };
  std::uniform_real_distribution<double> side(1.0, 4096.0);
  double worst_scale = 0;
  std::size_t crop_mismatch = 0;
  for (int i = 0; i < 100000; ++i) {
    const BBox b{coord(), coord(), extent(), extent()};
    const BBox crop{coord(), coord(), extent(), extent()};
    if (map_out_of_crop(map_into_crop(b, crop), crop) != b) ++crop_mismatch;
    const BBox r{side(rng), side(rng), side(rng), side(rng)};
    const Size2D from{side(rng), side(rng)}, to{side(rng), side(rng)};
    const BBox back = map_between_scales(map_between_scales(r, from, to), to, from);
    worst_scale = std::max(worst_scale, (back.as_vector() - r.as_vector()).cwiseAbs().maxCoeff());
  }
  c.expect(crop_mismatch == 0, std::to_string(crop_mismatch) + " inexact crop round trips");
  c.expect(worst_scale <= 1e-9, "scale error " + std::to_string(worst_scale));
  c.note("1e5 boxes, crop exact, worst scale error " + fmt(worst_scale * 1e12, 3) + "e-12");
}

// Every pixel of [0,X)x[0,Y) lies in some tile: paint tile counts on the
// grid compressed to tile edges and look for an empty cell.
bool layer_covers(const std::vector<BBox>& layer, long X, long Y) {
  std::vector<PixelRegion> pixels;
  for (const BBox& t : layer) pixels.push_back(quantize(t));
  std::vector<long> xs{0, X}, ys{0, Y};
  for (const PixelRegion& t : pixels) {
    xs.push_back(std::clamp(long(t.x), 0L, X));
    xs.push_back(std::clamp(long(t.x + t.w), 0L, X));
    ys.push_back(std::clamp(long(t.y), 0L, Y));
    ys.push_back(std::clamp(long(t.y + t.h), 0L, Y));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  const auto ix = [&](long v) { return long(std::lower_bound(xs.begin(), xs.end(), v) - xs.begin()); };
  const auto iy = [&](long v) { return long(std::lower_bound(ys.begin(), ys.end(), v) - ys.begin()); };
  const long nx = long(xs.size()), ny = long(ys.size());
  Eigen::MatrixXi diff = Eigen::MatrixXi::Zero(ny, nx);
  for (const PixelRegion& t : pixels) {
    const long x0 = ix(std::clamp(long(t.x), 0L, X)), x1 = ix(std::clamp(long(t.x + t.w), 0L, X));
    const long y0 = iy(std::clamp(long(t.y), 0L, Y)), y1 = iy(std::clamp(long(t.y + t.h), 0L, Y));
    diff(y0, x0) += 1;
    diff(y0, x1) -= 1;
    diff(y1, x0) -= 1;
    diff(y1, x1) += 1;
  }
  for (long y = 0; y < ny; ++y)
    for (long x = 0; x < nx; ++x) {
      if (y > 0) diff(y, x) += diff(y - 1, x);
      if (x > 0) diff(y, x) += diff(y, x - 1);
      if (x > 0 && y > 0) diff(y, x) -= diff(y - 1, x - 1);
    }
  for (long y = 0; y + 1 < ny; ++y)
    for (long x = 0; x + 1 < nx; ++x)
      if (diff(y, x) <= 0) return false;
  return true;
}

void tiling(Check& c) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<long> side(1, 4096), min_side(32, 512);
  std::size_t tiles = 0;
  for (int i = 0; i < 100; ++i) {
    const long X = side(rng), Y = side(rng), m = min_side(rng);
    const std::string tag = std::to_string(X) + "x" + std::to_string(Y) + "/" + std::to_string(m);
    const TileSet set = tile({double(X), double(Y)}, {double(m), double(m)});
    const TileSet again = tile({double(X), double(Y)}, {double(m), double(m)});
    c.expect(set.layers == again.layers, "nondeterministic " + tag);
    const auto expected = oracle::enumerate_tiles(X, Y, m);
    bool same = expected.size() == set.layers.size();
    for (std::size_t l = 0; same && l < expected.size(); ++l) {
      same = expected[l].size() == set.layers[l].size();
      for (std::size_t k = 0; same && k < expected[l].size(); ++k) {
        const auto& e = expected[l][k];
        same = set.layers[l][k] == BBox{e.x, e.y, e.w, e.h};
      }
    }
    c.expect(same, "order differs from scripted enumeration " + tag);
    for (std::size_t l = 0; l < set.layers.size(); ++l) {
      for (const BBox& t : set.layers[l]) {
        const PixelRegion p = quantize(t);
        c.expect(t.x >= 0 && t.y >= 0 && t.right() <= double(X) && t.bottom() <= double(Y) && t.w >= 1 && t.h >= 1 &&
                     p.x >= 0 && p.y >= 0 && p.x + p.w <= X && p.y + p.h <= Y,
                 "tile out of bounds " + tag + " " + str(t));
      }
      c.expect(layer_covers(set.layers[l], X, Y), "layer " + std::to_string(l) + " leaves a gap " + tag);
    }
    tiles += set.tile_count();
  }
  const std::size_t wide = tile({1200, 600}, {300, 300}).tile_count();
  c.expect(wide == 25, "1200x600/300 gives " + std::to_string(wide));
  c.note("100 sizes, " + std::to_string(tiles) + " tiles checked; 1200x600/300 -> " + std::to_string(wide));
}

// Answers with a fixed crop-local box, scaled to the tracker input.
class EchoTracker final : public TrackerProvider {
 public:
  explicit EchoTracker(BBox local) : local_(local) {}
  const TrackerInfo& info() const override { return info_; }
  TrackerOutput track(const Frame&, const Frame& next, std::span<const std::uint8_t> memory,
                      const ProviderHint& hint) override {
    std::vector<std::uint8_t> m(memory.begin(), memory.end());
    m.push_back(1);
    return {map_between_scales(local_, hint.region->size(), next.size()), m};
  }

 private:
  BBox local_;
  TrackerInfo info_;
};

std::shared_ptr<const SyntheticScene> scene_of(std::vector<ObjectSpec> objects, std::size_t frames,
                                               Size2D size = {640, 480}) {
  SceneSpec spec;
  spec.frame_size = size;
  spec.frame_count = frames;
  spec.objects = std::move(objects);
  return std::make_shared<const SyntheticScene>(3, spec);
}

void tracker_contract(Check& c) {
  // pseudo_track identity
  const std::vector<Annotation> none;
  c.expect(pseudo_track(none).empty(), "pseudo_track of nothing");
  std::vector<Annotation> anns{{{"horse", "1"}, {1.25, 2, 3, 4}}, {{"zebra", "2"}, {10, 20, 30, 40}}};
  anns[1].polygon = std::vector<Point>{{10, 20}, {40, 20}, {25, 60}};
  c.expect(pseudo_track(anns) == anns, "pseudo_track copies");

  // region substitution cases
  c.expect(track_region({10, 10, 20, 20}) == BBox{0, 0, 40, 40}, "region [10,10,20,20]");
  c.expect(track_region({5, 5, 3, 3}) == BBox{4, 4, 6, 6}, "region [5,5,3,3]");
  c.expect(track_region({0, 0, 10, 10}) == BBox{-5, -5, 20, 20}, "region [0,0,10,10]");

  // map back through the crop origin; a 64 px box gives a 128 px region, so
  // the tracker input scale is the identity and the result is exact
  const Annotation ann{{"horse", "1"}, {132, 82, 64, 64}};
  EchoTracker echo(BBox{12, 8, 20, 20});
  const Frame blank(640, 480);
  const TrackState s0 = track_init(blank, 0, ann, echo);
  const TrackStepResult mapped = track_step(blank, blank, 0, ann, s0, echo);
  c.expect(mapped.region == PixelRegion{100, 50, 128, 128}, "crop origin (100,50)");
  c.expect(mapped.proposal == BBox{112, 58, 20, 20}, "map back gives " + str(mapped.proposal));

  // state threading with the synthetic tracker over 20 frames
  auto scene = scene_of({{0, {100, 100, 40, 40}, {3, 2}, {4, 0}, 10}}, 21);
  SyntheticTrackerConfig drift;
  drift.mode = SyntheticTrackerMode::kDrifting;
  drift.bias = {1, 0};
  SyntheticTracker tracker(scene, drift);
  Annotation current{{"horse", "7"}, scene->truth(0, 0)};
  const std::vector<Frame> frames = scene->render_all();
  TrackState state = track_init(frames[0], 0, current, tracker);
  c.expect(state.last_frame == 0 && !state.memory.empty(), "init stores memory");
  for (std::size_t f = 0; f < 20; ++f) {
    const Annotation before = current;
    const TrackStepResult r = track_step(frames[f], frames[f + 1], f, current, state, tracker);
    c.expect(current == before, "input annotation mutated");
    const auto m = SyntheticTracker::Memory::decode(r.state.memory);
    c.expect(r.state.last_frame == f + 1, "last_frame at step " + std::to_string(f));
    c.expect(m.steps == f + 1 && m.object == 0, "memory threading at step " + std::to_string(f));
    c.expect(std::abs(m.drift_x - double(f + 1)) < 1e-12, "accumulated bias at step " + std::to_string(f));
    const BBox truth = scene->truth(0, f + 1);
    c.expect(std::abs(r.proposal.x - (truth.x + double(f + 1))) < 1e-9 && std::abs(r.proposal.y - truth.y) < 1e-9,
             "drifting proposal at step " + std::to_string(f) + ": " + str(r.proposal) + " vs " + str(truth));
    bool stale = false;
    try {
      track_step(frames[f], frames[f + 1], f, current, r.state, tracker);
    } catch (const Error& e) {
      stale = e.code() == ErrorCode::kStaleState;
    }
    c.expect(stale, "reused state not rejected at step " + std::to_string(f));
    state = r.state;
    current.box = r.proposal;
  }
  c.note("region/map-back exact; 20 threaded steps");
}

// Closed-form IOU of two w x h boxes offset by d along x.
double offset_iou(double w, double d) { return d >= w ? 0.0 : (w - d) / (w + d); }

struct DriftRun {
  double fused_min = 1.0;
  std::size_t fused_below = 0;  // frames under 0.8
  std::size_t fired = 0;
  double tracker_last = 1.0;
  std::size_t tracker_cross = 0;  // first frame under 0.5
};

DriftRun simulate_drift(double side, std::size_t frames_total, double bias, double sigma) {
  auto scene = scene_of({{0, {60, 120, side, side}, {2, 0.5}, {0, 6}, 25}}, frames_total);
  const std::vector<Frame> frames = scene->render_all();
  SyntheticTrackerConfig tcfg;
  tcfg.mode = SyntheticTrackerMode::kDrifting;
  tcfg.bias = {bias, 0};
  SyntheticDetectorConfig dcfg;
  dcfg.mode = SyntheticDetectorMode::kNoisy;
  dcfg.sigma = sigma;
  dcfg.confidence = 0.9;
  dcfg.seed = 2026;

  DriftRun run;
  run.tracker_cross = frames_total;
  const Annotation start{{"horse", "1"}, scene->truth(0, 0)};
  {
    SyntheticTracker tracker(scene, tcfg);
    SyntheticDetector detector(scene, dcfg);
    Annotation a = start;
    TrackState s = track_init(frames[0], 0, a, tracker);
    for (std::size_t f = 0; f + 1 < frames_total; ++f) {
      const FusedStepResult r = fused_step(frames[f], frames[f + 1], f, a, s, tracker, detector, FusionConfig{});
      const double v = iou(r.proposal, scene->truth(0, f + 1));
      run.fused_min = std::min(run.fused_min, v);
      run.fused_below += v < 0.8 ? 1 : 0;
      run.fired += r.report.gate_fired ? 1 : 0;
      a.box = r.proposal;
      s = r.state;
    }
  }
  {
    SyntheticTracker tracker(scene, tcfg);
    Annotation a = start;
    TrackState s = track_init(frames[0], 0, a, tracker);
    for (std::size_t f = 0; f + 1 < frames_total; ++f) {
      const TrackStepResult r = track_step(frames[f], frames[f + 1], f, a, s, tracker);
      run.tracker_last = iou(r.proposal, scene->truth(0, f + 1));
      if (run.tracker_last < 0.5 && run.tracker_cross == frames_total) run.tracker_cross = f + 1;
      a.box = r.proposal;
      s = r.state;
    }
  }
  return run;
}

void drift(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kFrames = 51;  // 50 transitions
  constexpr double kBias = 2, kSigma = 1;
  const FusionConfig fusion;
  const double w = fusion.detector_weight, gate = fusion.gate_iou;

  // Oracle. Fused error obeys e' = (1 - w)(e + bias) + w * noise, so it
  // settles at e* = (1 - w) bias / w and the tracker proposal sits at
  // e* + bias = bias / w from the truth. The gate needs (s - d) / (s + d) >= g
  // for offset d, i.e. s >= d (1 + g) / (1 - g); a 3 sigma margin on both
  // axes of the detector noise sets d.
  const double e_star = (1 - w) * kBias / w;
  const double d_gate = kBias / w + 3 * kSigma * std::sqrt(2.0);
  const double min_side = d_gate * (1 + gate) / (1 - gate);
  constexpr double kSide = 96;
  c.expect(kSide >= min_side, "object side below the gate margin " + fmt(min_side));
  c.expect(offset_iou(kSide, kBias * 50) < 0.5, "oracle tracker-only IOU@50 not below 0.5");
  std::size_t oracle_cross = 0;
  while (offset_iou(kSide, kBias * double(oracle_cross)) >= 0.5) ++oracle_cross;
  c.note("oracle: fused equilibrium offset " + fmt(e_star, 1) + " px (IOU " + fmt(offset_iou(kSide, e_star)) +
         "), min side " + fmt(min_side, 1) + ", tracker-only IOU@50 " + fmt(offset_iou(kSide, kBias * 50)) +
         ", below 0.5 from frame " + std::to_string(oracle_cross));

  const DriftRun run = simulate_drift(kSide, kFrames, kBias, kSigma);
  c.expect(run.fused_below == 0, std::to_string(run.fused_below) + " fused frames under 0.8, min " + fmt(run.fused_min));
  c.expect(run.tracker_last < 0.5, "tracker-only IOU at frame 50 is " + fmt(run.tracker_last));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  c.note(fmt(kSide, 0) + " px: fused min IOU " + fmt(run.fused_min) + " (gate fired " + std::to_string(run.fired) +
         "/50), tracker-only IOU@50 " + fmt(run.tracker_last) + ", below 0.5 from frame " +
         std::to_string(run.tracker_cross));

  // below the margin the gate misses and the fused track drifts away
  const DriftRun small = simulate_drift(48, kFrames, kBias, kSigma);
  c.note("48 px (min side " + fmt(min_side, 1) + " not met): fused min IOU " + fmt(small.fused_min) + ", " +
         std::to_string(small.fused_below) + " frames under 0.8");
  c.note(fmt(secs) + " s");
}

// Index of the scene object best matching `box` at `frame`, with its IOU.
std::pair<std::size_t, double> best_object(const SyntheticScene& scene, const BBox& box, std::size_t frame) {
  std::pair<std::size_t, double> best{0, -1.0};
  for (std::size_t o = 0; o < scene.objects().size(); ++o) {
    const double v = iou(box, scene.truth(o, frame));
    if (v > best.second) best = {o, v};
  }
  return best;
}

void end_to_end(Check& c) {
  TempDir dir;
  constexpr std::size_t kFrames = 21;
  const auto scene =
      std::make_shared<const SyntheticScene>(8, random_scene_spec(8, {640, 480}, kFrames, 8));
  write_scene(*scene, dir.path());
  EngineConfig cfg;
  cfg.variant = TrackerVariant::kFused;
  Session session(dir.path(), open_backend({}, dir.path()), cfg, [] { return std::int64_t{1676800000000}; });

  const auto added = session.detect(0);
  c.expect(added.size() == 8, "detected " + std::to_string(added.size()) + " of 8");
  std::map<std::string, std::size_t> object_of;
  std::set<std::size_t> matched;
  double detect_min = 1.0;
  for (const Annotation& a : added) {
    const auto [o, v] = best_object(*scene, a.box, 0);
    detect_min = std::min(detect_min, v);
    c.expect(v >= 0.9, "detection IOU " + fmt(v));
    object_of[a.label.instance_id] = o;
    matched.insert(o);
  }
  c.expect(matched.size() == 8, "detections cover " + std::to_string(matched.size()) + " objects");

  const TrackReport report = session.track_forward(0, kFrames - 1);
  double track_min = 1.0;
  for (std::size_t f = 1; f < kFrames; ++f) {
    const FrameAnnotations fa = session.annotations(f);
    c.expect(fa.annotations.size() == 8, "frame " + std::to_string(f) + " has " +
                                             std::to_string(fa.annotations.size()) + " annotations");
    for (const Annotation& a : fa.annotations) {
      const auto it = object_of.find(a.label.instance_id);
      if (it == object_of.end()) {
        c.expect(false, "unknown instance " + a.label.instance_id);
        continue;
      }
      const double v = iou(a.box, scene->truth(it->second, f));
      track_min = std::min(track_min, v);
      c.expect(v >= 0.8, "instance " + a.label.instance_id + " IOU " + fmt(v) + " at frame " + std::to_string(f));
    }
  }
  for (const auto& inst : report.instances)
    for (const auto& o : inst.frames) c.expect(o.status == "tracked", "status " + o.status);

  std::size_t duplicates = 0;
  for (std::size_t f : {std::size_t{0}, std::size_t{10}, kFrames - 1}) duplicates += session.detect(f).size();
  c.expect(duplicates == 0, std::to_string(duplicates) + " duplicates on re-detect");
  c.note("detect min IOU " + fmt(detect_min) + "; fused track min IOU " + fmt(track_min) + " over 20 frames");
  c.note("re-detect added " + std::to_string(duplicates));
}

FrameAnnotations random_frame(std::mt19937_64& rng, std::size_t index, const Size2D& size) {
  std::uniform_int_distribution<int> count(0, 12), cents(0, 50000), extent(100, 20000), coin(0, 1);
  static const std::vector<std::string> classes{"horse", "zebra", "race horse", "car"};
  FrameAnnotations fa;
  fa.frame_index = index;
  fa.image_path = "000000.png";
  fa.image_size = size;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Annotation a;
    a.label = {classes[std::size_t(count(rng)) % classes.size()], std::to_string(1676800000000000ULL + rng() % 100000) +
                                                                      std::to_string(i)};
    a.box = {cents(rng) / 100.0, cents(rng) / 100.0, extent(rng) / 100.0, extent(rng) / 100.0};
    a.provenance = static_cast<Provenance>(count(rng) % 4);
    a.tracking_enabled = coin(rng) != 0;
    if (coin(rng)) {
      std::uniform_real_distribution<double> ux(0, 1);
      std::vector<Point> poly;
      for (int k = 0; k < 4; ++k)
        poly.push_back({round_to_cents(a.box.x + ux(rng) * a.box.w), round_to_cents(a.box.y + ux(rng) * a.box.h)});
      a.polygon = poly;
    }
    fa.annotations.push_back(a);
  }
  return fa;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ANNOTRACK_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void persistence(Check& c) {
  TempDir dir;
  save_png(Frame(640, 480, Rgb{1, 2, 3}), dir / "000000.png");
  FrameStore store(dir.path());
  std::mt19937_64 rng(5);
  std::size_t round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    FrameAnnotations fa = random_frame(rng, 0, {640, 480});
    store.save(fa);
    const FrameAnnotations loaded = store.load(0);
    c.expect(loaded == fa, "value round trip " + std::to_string(i));
    const std::string first = testing::slurp(store.annotation_path(0));
    store.save(loaded);
    c.expect(testing::slurp(store.annotation_path(0)) == first, "re-save not byte-stable " + std::to_string(i));
    round_trips += loaded == fa;
  }

  TempDir synth;
  c.expect(run_cli("synth --seed 3 --frames 3 --objects 4 --out " + synth.path().string()) == 0, "synth");
  c.expect(run_cli("detect --frames " + synth.path().string() + " --frame 0") == 0, "detect");
  c.expect(run_cli("track --frames " + synth.path().string() + " --from 0 --to 2") == 0, "track");
  c.expect(run_cli("validate " + synth.path().string()) == 0, "validate rejects its own output");

  const std::string good = testing::slurp(synth / "000000.json");
  const auto label_at = good.find("\"label\": \"") + 10;
  const std::string first_label = good.substr(label_at, good.find('"', label_at) - label_at);
  const auto second_at = good.find("\"label\": \"", label_at) + 10;
  const auto second_len = good.find('"', second_at) - second_at;
  const auto replace = [&](std::size_t at, std::size_t len, const std::string& with) {
    std::string s = good;
    return s.replace(at, len, with);
  };
  const std::vector<std::pair<std::string, std::string>> corruptions{
      {"truncated", good.substr(0, good.size() / 3)},
      {"duplicate instance", replace(second_at, second_len, first_label)},
      {"bad label", replace(label_at, first_label.size(), "horse")},
      {"bad shape type", replace(good.find("rectangle"), 9, "ellipse")},
      {"bad image width", replace(good.find("\"imageWidth\": ") + 14, 1, "\"x\", \"y\": ")},
      {"bad provenance", replace(good.find("\"description\": \"") + 16, 1, "?")},
  };
  std::size_t rejected = 0;
  for (const auto& [name, text] : corruptions) {
    testing::spit(synth / "000000.json", text);
    const int code = run_cli("validate " + synth.path().string());
    c.expect(code == 1, name + " gave exit " + std::to_string(code));
    rejected += code == 1;
  }
  testing::spit(synth / "000000.json", good);
  testing::spit(synth / "000099.json", good);
  const int orphan = run_cli("validate " + synth.path().string());
  c.expect(orphan == 1, "orphan gave exit " + std::to_string(orphan));
  rejected += orphan == 1;
  c.note(std::to_string(round_trips) + "/1000 round trips; " + std::to_string(rejected) + "/" +
         std::to_string(corruptions.size() + 1) + " corruptions rejected");
}

void service(Check& c) {
  TempDir dir;
  const auto scene = std::make_shared<const SyntheticScene>(4, random_scene_spec(4, {320, 240}, 5, 3));
  write_scene(*scene, dir.path());
  EngineConfig cfg;
  cfg.variant = TrackerVariant::kBaseline;
  Session session(dir.path(), open_backend({}, dir.path()), cfg, [] { return std::int64_t{1}; });
  HttpServer server(session);
  const int port = server.bind("127.0.0.1", 0);
  std::thread thread([&] { server.serve(); });
  httplib::Client client("127.0.0.1", port);

  FrameAnnotations fa = session.annotations(0);
  fa.annotations = {{{"horse", "11"}, {10.5, 20.25, 30, 40}}, {{"car", "12"}, {100, 100, 50.75, 20}}};
  const auto put = client.Put("/api/annotations/0", {{"If-Match", "\"absent\""}}, serialize(fa), "application/json");
  c.expect(put && put->status == 200, "PUT status");
  const auto get = client.Get("/api/annotations/0");
  c.expect(get && get->status == 200 && get->body == serialize(fa), "GET returns the PUT document");
  c.expect(get && put && get->get_header_value("ETag") == put->get_header_value("ETag"), "etag stable");

  const auto track = client.Post("/api/track", R"({"from":0,"to":4})", "application/json");
  c.expect(track && track->status == 200, "track status");
  std::size_t copied = 0;
  for (int f = 1; f <= 4; ++f) {
    const auto r = client.Get("/api/annotations/" + std::to_string(f));
    if (!r || r->status != 200) {
      c.expect(false, "GET frame " + std::to_string(f));
      continue;
    }
    const FrameAnnotations got = parse_frame_annotations(r->body, "http", std::size_t(f));
    bool same = got.annotations.size() == fa.annotations.size();
    for (std::size_t k = 0; same && k < fa.annotations.size(); ++k)
      same = got.annotations[k].box == fa.annotations[k].box && got.annotations[k].label == fa.annotations[k].label;
    c.expect(same, "baseline copy at frame " + std::to_string(f));
    copied += same;
  }
  server.stop();
  thread.join();

  // kill a writer mid-save: the file must hold one complete earlier version
  FrameStore store(dir.path());
  std::vector<FrameAnnotations> versions;
  for (int v = 0; v < 2; ++v) {
    FrameAnnotations big = session.annotations(1);
    big.annotations.clear();
    for (int i = 0; i < 20000; ++i)
      big.annotations.push_back({{"horse", std::to_string(1000000 * (v + 1) + i)}, {double(i % 300), double(v), 10, 10}});
    versions.push_back(big);
  }
  store.save(versions[0]);
  std::size_t intact = 0, trials = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const pid_t child = ::fork();
    if (child == 0) {
      for (int k = 1;; ++k) store.save(versions[std::size_t(k % 2)]);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(40 + 37 * trial));
    ::kill(child, SIGKILL);
    ::waitpid(child, nullptr, 0);
    ++trials;
    try {
      const FrameAnnotations now = store.load(1);
      const bool whole = now == versions[0] || now == versions[1];
      c.expect(whole, "torn file after kill " + std::to_string(trial));
      intact += whole;
    } catch (const Error& e) {
      c.expect(false, std::string("unreadable after kill: ") + e.what());
    }
  }
  c.note("baseline copied to " + std::to_string(copied) + "/4 frames; " + std::to_string(intact) + "/" +
         std::to_string(trials) + " kills left an intact file");
}

}  // namespace
}  // namespace annotrack

int main() {
  using namespace annotrack;
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"nms-five-box-example", five_box_example},
      {"nms-oracle-equivalence", nms_oracle},
      {"geometry-round-trips", geometry},
      {"tiling", tiling},
      {"tracker-contract", tracker_contract},
      {"drift-compensation", drift},
      {"end-to-end-pipeline", end_to_end},
      {"persistence", persistence},
      {"service-contract", service},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check check;
    try {
      run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (check.ok() ? "PASS " : "FAIL ") << name << ":" << check.summary() << std::endl;
    failed += check.ok() ? 0 : 1;
  }
  std::cout << (criteria.size() - std::size_t(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

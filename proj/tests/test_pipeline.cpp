// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "annotrack/backends/synthetic.hpp"
#include "annotrack/detect.hpp"
#include "annotrack/errors.hpp"
#include "annotrack/fuse.hpp"
#include "annotrack/tiling.hpp"
#include "annotrack/track.hpp"

namespace annotrack {
namespace {

std::shared_ptr<const SyntheticScene> make_scene(std::vector<ObjectSpec> objects, std::size_t frames,
                                                 Size2D size = {640, 480}) {
  SceneSpec spec;
  spec.frame_size = size;
  spec.frame_count = frames;
  spec.objects = std::move(objects);
  return std::make_shared<const SyntheticScene>(1, spec);
}

Annotation annotate(const BBox& box, const std::string& id = "1") { return {{"horse", id}, box}; }

class FailingDetector final : public DetectorProvider {
 public:
  FailingDetector() { info_.class_names = {"horse"}; }
  const DetectorInfo& info() const override { return info_; }
  std::vector<Detection> detect(const Frame&, const ProviderHint&) override {
    throw Error(ErrorCode::kProvider, "detector offline");
  }

 private:
  DetectorInfo info_;
};

// Reports fixed frame-coordinate boxes, mapped into the hinted crop.
class ScriptedDetector final : public DetectorProvider {
 public:
  explicit ScriptedDetector(std::vector<std::pair<BBox, std::vector<double>>> boxes) : boxes_(std::move(boxes)) {
    info_.class_names = {"horse", "zebra"};
  }
  const DetectorInfo& info() const override { return info_; }
  std::vector<Detection> detect(const Frame& input, const ProviderHint& hint) override {
    std::vector<Detection> out;
    for (const auto& [b, scores] : boxes_)
      out.push_back({map_between_scales(map_into_crop(b, *hint.region), hint.region->size(), input.size()),
                     scores});
    return out;
  }

 private:
  DetectorInfo info_;
  std::vector<std::pair<BBox, std::vector<double>>> boxes_;
};

// ---------------------------------------------------------------------------

TEST(RemoveTruncated, Margins) {
  const Size2D input{300, 300};
  const Size2D frame{1200, 600};
  const BBox interior{150, 150, 300, 300};
  const BBox left_edge{0, 150, 300, 300};
  const std::vector<Detection> center{{{120, 120, 60, 60}, {0.9}}};
  EXPECT_EQ(remove_truncated(center, interior, frame, input, 0.05).size(), 1u);
  const std::vector<Detection> at_x0{{{0, 120, 60, 60}, {0.9}}};
  EXPECT_TRUE(remove_truncated(at_x0, interior, frame, input, 0.05).empty());
  EXPECT_EQ(remove_truncated(at_x0, left_edge, frame, input, 0.05).size(), 1u);
  const std::vector<Detection> near_right{{{250, 120, 40, 60}, {0.9}}};
  EXPECT_TRUE(remove_truncated(near_right, interior, frame, input, 0.05).empty());
  EXPECT_EQ(remove_truncated(near_right, BBox{900, 150, 300, 300}, frame, input, 0.05).size(), 1u);
}

TEST(ToScored, PerClassAndArgmax) {
  const std::vector<Detection> d{{{0, 0, 5, 5}, {0.7, 0.6, 0.2}}};
  DetectConfig cfg;
  EXPECT_EQ(to_scored(d, cfg, 3).size(), 2u);
  cfg.argmax_only = true;
  const auto one = to_scored(d, cfg, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].class_id, 0);
  EXPECT_EQ(one[0].source, 3);
}

TEST(DetectFrame, NoneDetectorGivesNothing) {
  auto scene = make_scene({{0, {100, 100, 40, 40}}}, 1);
  SyntheticDetector det(scene, {.mode = SyntheticDetectorMode::kNone});
  EXPECT_TRUE(detect_frame(scene->render(0), 0, det, {}).empty());
}

TEST(DetectFrame, SingleObjectMappedBack) {
  const BBox truth{400, 180, 50, 40};
  auto scene = make_scene({{1, truth}}, 1, {1200, 600});
  SyntheticDetector det(scene);
  const auto found = detect_frame(scene->render(0), 0, det, {});
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].class_id, 1);
  EXPECT_DOUBLE_EQ(found[0].score, 0.9);
  EXPECT_NEAR((found[0].box.as_vector() - truth.as_vector()).cwiseAbs().maxCoeff(), 0.0, 1.0);
}

TEST(DetectFrame, BorderObjectSurvives) {
  const BBox truth{0, 200, 60, 60};
  auto scene = make_scene({{0, truth}}, 1, {1200, 600});
  SyntheticDetector det(scene);
  const auto found = detect_frame(scene->render(0), 0, det, {});
  ASSERT_EQ(found.size(), 1u);
  EXPECT_GE(iou(found[0].box, truth), 0.99);
}

TEST(DetectFrame, TileOrderIndependent) {
  auto scene = make_scene(random_scene_spec(3, {900, 700}, 1, 6).objects, 1, {900, 700});
  SyntheticDetector det(scene, {.mode = SyntheticDetectorMode::kNoisy, .sigma = 2.0, .seed = 4});
  const Frame f = scene->render(0);
  const auto tiles = tile(f.size(), det.info().input_size).flatten();
  const auto base = detect_tiles(f, 0, tiles, det, {});
  std::vector<std::size_t> order(tiles.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(order.begin(), order.end(), rng);
    EXPECT_EQ(detect_tiles(f, 0, tiles, det, {}, order), base);
  }
  for (const ScoredBox& s : base) {
    EXPECT_GE(s.box.x, 0);
    EXPECT_GE(s.box.y, 0);
    EXPECT_LE(s.box.right(), 900);
    EXPECT_LE(s.box.bottom(), 700);
  }
}

TEST(DetectFrame, ProviderFailureNamesTile) {
  auto scene = make_scene({{0, {10, 10, 20, 20}}}, 1);
  FailingDetector det;
  try {
    detect_frame(scene->render(0), 0, det, {});
    FAIL() << "expected a provider error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProvider);
    EXPECT_NE(std::string(e.what()).find("tile"), std::string::npos);
  }
}

TEST(AutoAnnotate, LabelsAndExclusion) {
  auto scene = make_scene({{0, {100, 100, 50, 50}}, {1, {300, 200, 60, 40}}}, 1);
  SyntheticDetector det(scene);
  InstanceIdGenerator ids([] { return std::int64_t{1676800000000}; });
  const Frame f = scene->render(0);
  const auto added = auto_annotate(0, f, {}, det, {}, ids);
  ASSERT_EQ(added.size(), 2u);
  EXPECT_EQ(added[0].label.class_name, "horse");
  EXPECT_EQ(added[1].label.class_name, "zebra");
  EXPECT_NE(added[0].label.instance_id, added[1].label.instance_id);
  EXPECT_EQ(added[0].provenance, Provenance::kDetected);
  EXPECT_TRUE(added[0].tracking_enabled);
  EXPECT_TRUE(auto_annotate(0, f, added, det, {}, ids).empty());
}

// ---------------------------------------------------------------------------

TEST(TrackRegion, Examples) {
  EXPECT_EQ(track_region({10, 10, 20, 20}), (BBox{0, 0, 40, 40}));
  EXPECT_EQ(track_region({5, 5, 3, 3}), (BBox{4, 4, 6, 6}));
  EXPECT_EQ(track_region({0, 0, 10, 10}), (BBox{-5, -5, 20, 20}));
  EXPECT_THROW(track_region({0, 0, 0.5, 10}), Error);
}

TEST(TrackRegion, DoublesExtentKeepsCenter) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(1, 300);
  for (int i = 0; i < 200; ++i) {
    const BBox b{double(u(rng)), double(u(rng)), double(u(rng)), double(u(rng))};
    const BBox r = track_region(b);
    EXPECT_EQ(r.w, 2 * b.w);
    EXPECT_EQ(r.h, 2 * b.h);
    EXPECT_LE(std::abs(r.center().x() - b.center().x()), 0.5 + 1e-9);
    EXPECT_LE(std::abs(r.center().y() - b.center().y()), 0.5 + 1e-9);
  }
}

// Echoes the crop-local box it is told to, scaled to the tracker input.
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

TEST(TrackStep, MapsBackThroughCropOrigin) {
  // box [120,70,20,20] -> region [110,60,40,40]; an origin of (100,50) needs box [110,60,...]
  const Annotation ann = annotate({110, 60, 20, 20});
  ASSERT_EQ(track_crop_region(ann.box), (PixelRegion{100, 50, 40, 40}));
  EchoTracker tracker(BBox{12, 8, 20, 20});
  const Frame a(320, 240), b(320, 240);
  const TrackState s0 = track_init(a, 4, ann, tracker);
  EXPECT_EQ(s0.last_frame, 4u);
  EXPECT_FALSE(s0.memory.empty());
  const TrackStepResult r = track_step(a, b, 4, ann, s0, tracker);
  EXPECT_NEAR((r.proposal.as_vector() - BBox{112, 58, 20, 20}.as_vector()).cwiseAbs().maxCoeff(), 0, 1e-9);
  EXPECT_EQ(r.state.last_frame, 5u);
  EXPECT_EQ(r.region, (PixelRegion{100, 50, 40, 40}));
}

TEST(TrackStep, RejectsStaleStateAndSizeMismatch) {
  const Annotation ann = annotate({50, 50, 20, 20});
  EchoTracker tracker(BBox{10, 10, 20, 20});
  const Frame a(200, 200), b(200, 200), c(100, 200);
  const TrackState s = track_init(a, 0, ann, tracker);
  try {
    track_step(a, b, 1, ann, s, tracker);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleState);
  }
  EXPECT_THROW(track_step(a, c, 0, ann, s, tracker), Error);
}

TEST(TrackStep, PerfectTrackerFollowsTranslation) {
  auto scene = make_scene({{0, {100, 100, 40, 40}, {3, 3}}}, 6);
  SyntheticTracker tracker(scene);
  Annotation ann = annotate(scene->truth(0, 0));
  TrackState s = track_init(scene->render(0), 0, ann, tracker);
  for (std::size_t f = 0; f + 1 < 6; ++f) {
    const auto r = track_step(scene->render(f), scene->render(f + 1), f, ann, s, tracker);
    EXPECT_NEAR((r.proposal.as_vector() - scene->truth(0, f + 1).as_vector()).cwiseAbs().maxCoeff(), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(iou(r.proposal, scene->truth(0, f + 1)), 1.0);
    s = r.state;
    ann.box = r.proposal;
  }
  EXPECT_EQ(s.last_frame, 5u);
}

TEST(TrackStep, StaticSceneAndEdgeInit) {
  auto scene = make_scene({{0, {0, 0, 30, 30}}}, 2);
  SyntheticTracker tracker(scene);
  const Annotation ann = annotate({0, 0, 30, 30});
  const TrackState s = track_init(scene->render(0), 0, ann, tracker);
  const auto r = track_step(scene->render(0), scene->render(1), 0, ann, s, tracker);
  EXPECT_NEAR((r.proposal.as_vector() - ann.box.as_vector()).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(TrackStep, DriftingTrackerBias) {
  auto scene = make_scene({{0, {200, 150, 64, 48}, {1, 0}}}, 3);
  SyntheticTracker tracker(scene, {.mode = SyntheticTrackerMode::kDrifting, .bias = {2, 0}});
  const Annotation ann = annotate(scene->truth(0, 0));
  const TrackState s = track_init(scene->render(0), 0, ann, tracker);
  const auto r = track_step(scene->render(0), scene->render(1), 0, ann, s, tracker);
  const BBox truth = scene->truth(0, 1);
  EXPECT_NEAR(r.proposal.x - truth.x, 2.0, 1e-9);
  EXPECT_NEAR(r.proposal.y - truth.y, 0.0, 1e-9);
  EXPECT_NEAR(r.proposal.w, truth.w, 1e-9);
}

TEST(PseudoTrack, CopiesVerbatim) {
  EXPECT_TRUE(pseudo_track({}).empty());
  std::vector<Annotation> anns{annotate({1, 2, 3, 4}, "7"), annotate({5, 6, 7, 8}, "9")};
  anns[1].polygon = std::vector<Point>{{5, 6}, {12, 6}, {12, 14}};
  EXPECT_EQ(pseudo_track(anns), anns);
}

// ---------------------------------------------------------------------------

TEST(Fusion, BlendExample) {
  const BBox t{100, 100, 50, 50}, d{102, 98, 50, 52};
  EXPECT_NEAR(iou(t, d), 0.889, 1e-3);
  EXPECT_EQ(blend(t, d, 0.5), (BBox{101, 99, 50, 51}));
  EXPECT_EQ(blend(t, d, 0.0), t);
}

TEST(Fusion, SelectCandidate) {
  const BBox ref{0, 0, 10, 10};
  const std::vector<BBox> c{{5, 0, 10, 10}, {1, 0, 10, 10}, {-1, 0, 10, 10}};
  const std::vector<double> conf{0.9, 0.6, 0.7};
  EXPECT_EQ(select_candidate(ref, c, conf), 2u);
  EXPECT_FALSE(select_candidate(ref, {}, {}).has_value());
}

struct FusionFixture : ::testing::Test {
  std::shared_ptr<const SyntheticScene> scene = make_scene({{0, {100, 100, 50, 50}}}, 2);
  EchoTracker tracker{BBox{25, 25, 50, 50}};  // lands on [100,100,50,50]
  Annotation ann = annotate({100, 100, 50, 50});
  Frame f0 = scene->render(0), f1 = scene->render(1);
  TrackState s = track_init(f0, 0, ann, tracker);
};

TEST_F(FusionFixture, GateOpenBlends) {
  ScriptedDetector det({{BBox{102, 98, 50, 52}, {0.9, 0.0}}});
  const auto r = fused_step(f0, f1, 0, ann, s, tracker, det, {});
  EXPECT_TRUE(r.report.gate_fired);
  EXPECT_NEAR((r.proposal.as_vector() - BBox{101, 99, 50, 51}.as_vector()).cwiseAbs().maxCoeff(), 0, 1e-9);
  for (int k = 0; k < 4; ++k) {
    const double lo = std::min(r.report.tracker_box.as_vector()[k], r.report.detector_box->as_vector()[k]);
    const double hi = std::max(r.report.tracker_box.as_vector()[k], r.report.detector_box->as_vector()[k]);
    EXPECT_GE(r.proposal.as_vector()[k], lo - 1e-12);
    EXPECT_LE(r.proposal.as_vector()[k], hi + 1e-12);
  }
}

TEST_F(FusionFixture, ClassAgnostic) {
  ScriptedDetector horse({{BBox{102, 98, 50, 52}, {0.9, 0.0}}});
  ScriptedDetector zebra({{BBox{102, 98, 50, 52}, {0.1, 0.75}}});
  EXPECT_EQ(fused_step(f0, f1, 0, ann, s, tracker, horse, {}).proposal,
            fused_step(f0, f1, 0, ann, s, tracker, zebra, {}).proposal);
}

TEST_F(FusionFixture, GateClosedIsTrackStep) {
  ScriptedDetector det({{BBox{125, 100, 50, 50}, {0.9, 0.0}}});
  const auto r = fused_step(f0, f1, 0, ann, s, tracker, det, {});
  const auto plain = track_step(f0, f1, 0, ann, s, tracker);
  EXPECT_FALSE(r.report.gate_fired);
  EXPECT_NEAR(r.report.iou, 0.5 / 1.5, 1e-9);
  EXPECT_EQ(r.proposal, plain.proposal);
  EXPECT_EQ(r.state, plain.state);
}

TEST_F(FusionFixture, LowConfidenceIgnoredAndZeroWeight) {
  ScriptedDetector weak({{BBox{102, 98, 50, 52}, {0.3, 0.2}}});
  const auto r = fused_step(f0, f1, 0, ann, s, tracker, weak, {});
  EXPECT_FALSE(r.report.gate_fired);
  EXPECT_FALSE(r.report.detector_box.has_value());

  ScriptedDetector det({{BBox{102, 98, 50, 52}, {0.9, 0.0}}});
  FusionConfig cfg;
  cfg.detector_weight = 0;
  const auto z = fused_step(f0, f1, 0, ann, s, tracker, det, cfg);
  EXPECT_TRUE(z.report.gate_fired);
  EXPECT_EQ(z.proposal, track_step(f0, f1, 0, ann, s, tracker).proposal);
}

TEST_F(FusionFixture, DetectorFailureDegrades) {
  FailingDetector det;
  const auto r = fused_step(f0, f1, 0, ann, s, tracker, det, {});
  EXPECT_TRUE(r.report.detector_failed);
  EXPECT_FALSE(r.report.warning.empty());
  EXPECT_EQ(r.proposal, track_step(f0, f1, 0, ann, s, tracker).proposal);
}

TEST(Fusion, ConfigValidates) {
  FusionConfig cfg;
  cfg.gate_iou = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "annotrack/backends/synthetic.hpp"
#include "annotrack/errors.hpp"
#include "annotrack/service/http_server.hpp"
#include "annotrack/service/session.hpp"
#include "annotrack/store.hpp"
#include "backend_flags.hpp"

namespace {

using namespace annotrack;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kUsage = 2;
constexpr int kProviderFailure = 3;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProvider:
    case ErrorCode::kStaleState: return kProviderFailure;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kNotFound: return kUsage;
    default: return kValidationFailure;
  }
}

struct Common {
  std::string frames;
  std::string config_file;
  BackendOptions backend;
  std::string variant;
  long long clock_ms = -1;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--frames", c.frames, "frames directory")->required()->check(CLI::ExistingDirectory);
  cmd.add_option("--config", c.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd.add_option("--backend", c.backend.kind, "synthetic, pipe or none")
      ->check(CLI::IsMember({"synthetic", "pipe", "none"}));
  cmd.add_option("--sidecar", c.backend.sidecar_command, "sidecar command line for --backend pipe");
  cmd.add_option("--clock-ms", c.clock_ms, "fixed epoch milliseconds for new instance ids");
  tools::add_synthetic_flags(cmd, c.backend.detector, c.backend.tracker);
}

std::unique_ptr<Session> open_session(const Common& c) {
  EngineConfig cfg;
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    std::stringstream text;
    text << in.rdbuf();
    apply_config_text(cfg, text.str(), c.config_file);
  }
  if (!c.variant.empty()) cfg.variant = *parse_variant(c.variant);
  InstanceIdGenerator::Clock clock = system_epoch_ms;
  if (c.clock_ms >= 0) clock = [ms = c.clock_ms] { return static_cast<std::int64_t>(ms); };
  return std::make_unique<Session>(c.frames, open_backend(c.backend, c.frames), cfg, clock);
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annotrack: assisted video annotation"};
  app.require_subcommand(1);

  Common detect_opts;
  std::size_t detect_frame = 0;
  auto* detect = app.add_subcommand("detect", "auto-annotate one frame");
  add_common(*detect, detect_opts);
  detect->add_option("--frame", detect_frame, "frame index")->required();

  Common track_opts;
  std::size_t from = 0, to = 0;
  std::vector<std::string> only;
  auto* track = app.add_subcommand("track", "propagate annotations forward");
  add_common(*track, track_opts);
  track->add_option("--from", from, "source frame")->required();
  track->add_option("--to", to, "last destination frame")->required();
  track->add_option("--variant", track_opts.variant, "baseline, tracker or fused")
      ->check(CLI::IsMember({"baseline", "tracker", "tracker_only", "fused"}));
  track->add_option("--instance", only, "restrict to these instance ids");

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "check every annotation file of a frames directory");
  validate->add_option("dir", validate_dir, "frames directory")->required()->check(CLI::ExistingDirectory);

  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t frames = 30, objects = 4;
  double width = 640, height = 480;
  auto* synth = app.add_subcommand("synth", "write a synthetic scene with ground truth");
  synth->add_option("--seed", seed, "scene seed")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--frames", frames, "frame count")->required()->check(CLI::PositiveNumber);
  synth->add_option("--objects", objects, "object count");
  synth->add_option("--width", width, "frame width")->check(CLI::PositiveNumber);
  synth->add_option("--height", height, "frame height")->check(CLI::PositiveNumber);

  Common serve_opts;
  auto* serve = app.add_subcommand("serve", "run the HTTP service (bind address from ANNOTRACK_ADDR)");
  add_common(*serve, serve_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (detect->parsed()) {
      auto session = open_session(detect_opts);
      const std::vector<Annotation> added = session->detect(detect_frame);
      nlohmann::json labels = nlohmann::json::array();
      for (const Annotation& a : added) labels.push_back(a.label.render());
      std::cout << nlohmann::json{{"frame", detect_frame}, {"added", labels}}.dump(2) << "\n";
    } else if (track->parsed()) {
      auto session = open_session(track_opts);
      std::optional<std::set<std::string>> filter;
      if (!only.empty()) filter = std::set<std::string>(only.begin(), only.end());
      const TrackReport report = session->track_forward(from, to, filter);
      std::cout << to_json(report).dump(2) << "\n";
      for (const InstanceReport& inst : report.instances)
        for (const FrameOutcome& o : inst.frames)
          if (o.status == "failed") return kProviderFailure;
    } else if (validate->parsed()) {
      const std::vector<ValidationIssue> issues = validate_directory(validate_dir);
      for (const ValidationIssue& i : issues) std::cerr << i.file.string() << ": " << i.message << "\n";
      if (!issues.empty()) return kValidationFailure;
      std::cout << "ok\n";
    } else if (synth->parsed()) {
      SceneSpec spec = random_scene_spec(seed, {width, height}, frames, objects);
      write_scene(SyntheticScene(seed, std::move(spec)), out_dir);
    } else if (serve->parsed()) {
      auto session = open_session(serve_opts);
      HttpServer server(*session);
      const auto [host, port] = bind_address_from_env();
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << bound << "\n";
      server.serve();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "annotrack: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "annotrack: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kOk;
}

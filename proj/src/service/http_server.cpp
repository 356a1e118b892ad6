// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/service/http_server.hpp"

#include <cstdlib>
#include <set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "annotrack/backends/protocol.hpp"
#include "annotrack/image_io.hpp"

namespace annotrack {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kMalformedFile:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDegenerateBox:
    case ErrorCode::kDegenerateRegion:
    case ErrorCode::kRegionOutsideFrame: return 400;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kProvider:
    case ErrorCode::kStaleState: return 502;
    default: return 500;
  }
}

std::pair<std::string, int> bind_address_from_env() {
  std::string addr = "127.0.0.1:8080";
  if (const char* env = std::getenv("ANNOTRACK_ADDR"); env && *env) addr = env;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr, 8080};
  try {
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad ANNOTRACK_ADDR \"" + addr + "\"");
  }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

std::size_t index_param(const httplib::Request& req) {
  const std::string& raw = req.matches[1];
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(raw, &pos);
    if (pos == raw.size()) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kNotFound, "no frame \"" + raw + "\"");
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key))
    throw Error(ErrorCode::kInvalidArgument, std::string("missing field \"") + key + "\"");
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

struct HttpServer::Impl {
  Session& session;
  httplib::Server server;

  explicit Impl(Session& s) : session(s) { routes(); }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/api/meta", guarded([this](const httplib::Request&, httplib::Response& res) {
      json frames = json::array();
      for (std::size_t i = 0; i < session.frame_count(); ++i) frames.push_back(session.store().image_name(i));
      json body = {{"frame_count", session.frame_count()},
                   {"frames", std::move(frames)},
                   {"protocol", proto::kVersion},
                   {"variant", std::string(to_string(session.config().variant))},
                   {"detector", nullptr},
                   {"tracker", nullptr}};
      if (const auto& d = session.providers().detector)
        body["detector"] = {{"class_names", d->info().class_names},
                            {"input_size", {d->info().input_size.w, d->info().input_size.h}}};
      if (const auto& t = session.providers().tracker)
        body["tracker"] = {{"input_size", {t->info().input_size.w, t->info().input_size.h}}};
      send_json(res, body);
    }));

    server.Get("/api/timeline", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"frame_count", session.frame_count()}, {"annotated", session.timeline()}});
    }));

    server.Get(R"(/api/frames/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto png = encode_png(*session.frame(index_param(req)));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Get(R"(/api/annotations/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::size_t f = index_param(req);
                 const std::string tag = session.etag(f);
                 res.set_header("ETag", tag);
                 res.set_content(serialize(session.annotations(f)), "application/json");
               }));

    server.Put(R"(/api/annotations/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::size_t f = index_param(req);
                 if (f >= session.frame_count())
                   throw Error(ErrorCode::kNotFound, "frame " + std::to_string(f) + " does not exist");
                 FrameAnnotations incoming =
                     parse_frame_annotations(req.body, "request body", f);
                 std::optional<std::string> if_match;
                 if (req.has_header("If-Match")) if_match = req.get_header_value("If-Match");
                 const std::string tag = session.put_annotations(f, std::move(incoming), if_match);
                 res.set_header("ETag", tag);
                 res.set_content(serialize(session.annotations(f)), "application/json");
               }));

    server.Post("/api/detect", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t f = field<std::size_t>(parse_body(req), "frame");
      const std::vector<Annotation> added = session.detect(f);
      json labels = json::array();
      for (const Annotation& a : added) labels.push_back(a.label.render());
      send_json(res, {{"frame", f}, {"added", std::move(labels)}});
    }));

    server.Post("/api/track", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto from = field<std::size_t>(body, "from");
      const auto to = field<std::size_t>(body, "to");
      std::optional<std::set<std::string>> instances;
      if (body.contains("instances") && !body["instances"].is_null())
        instances = field<std::set<std::string>>(body, "instances");
      send_json(res, to_json(session.track_forward(from, to, instances)));
    }));

    server.Get("/api/track/progress", guarded([this](const httplib::Request&, httplib::Response& res) {
      const TrackProgress p = session.progress();
      send_json(res, {{"running", p.running}, {"from", p.from}, {"to", p.to}, {"current", p.current}});
    }));

    server.Post("/api/track/cancel", guarded([this](const httplib::Request&, httplib::Response& res) {
      session.cancel_tracking();
      send_json(res, {{"cancelled", true}});
    }));

    server.Post(R"(/api/instances/([0-9]+)/tracking)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const bool enabled = field<bool>(parse_body(req), "enabled");
                  const std::size_t changed = session.set_tracking(id, enabled);
                  send_json(res, {{"instance_id", id}, {"enabled", enabled}, {"frames_changed", changed}});
                }));

    server.Get("/api/config", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, to_json(session.config()));
    }));

    server.Patch("/api/config", guarded([this](const httplib::Request& req, httplib::Response& res) {
      EngineConfig cfg = session.config();
      apply_patch(cfg, parse_body(req));
      session.set_config(cfg);
      send_json(res, to_json(session.config()));
    }));
  }
};

HttpServer::HttpServer(Session& session) : impl_(std::make_unique<Impl>(session)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "annotrack/errors.hpp"
#include "annotrack/image_io.hpp"

namespace annotrack {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kLabelmeVersion = "5.2.1";
constexpr const char* kGroundTruthFile = "ground_truth.json";

[[noreturn]] void malformed(const std::string& origin, const std::string& what) {
  throw Error(ErrorCode::kMalformedFile, origin + ": " + what);
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kManual: return "manual";
    case Provenance::kTracked: return "tracked";
    case Provenance::kDetected: return "detected";
    case Provenance::kFused: return "fused";
  }
  return "manual";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
  for (Provenance p : {Provenance::kManual, Provenance::kTracked, Provenance::kDetected,
                       Provenance::kFused}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string InstanceLabel::render() const { return class_name + " " + instance_id; }

InstanceLabel parse_label(std::string_view text) {
  const auto space = text.rfind(' ');
  if (space == std::string_view::npos || space == 0)
    throw Error(ErrorCode::kMalformedFile, "label '" + std::string(text) + "' lacks an instance id");
  InstanceLabel label{std::string(text.substr(0, space)), std::string(text.substr(space + 1))};
  if (!is_digits(label.instance_id))
    throw Error(ErrorCode::kMalformedFile, "label '" + std::string(text) + "' has a non-numeric instance id");
  if (is_blank(label.class_name) || label.class_name.back() == ' ')
    throw Error(ErrorCode::kMalformedFile, "label '" + std::string(text) + "' has a blank class name");
  return label;
}

const Annotation* FrameAnnotations::find(std::string_view instance_id) const {
  for (const Annotation& a : annotations)
    if (a.label.instance_id == instance_id) return &a;
  return nullptr;
}

Annotation* FrameAnnotations::find(std::string_view instance_id) {
  return const_cast<Annotation*>(std::as_const(*this).find(instance_id));
}

std::string format_instance_id(std::int64_t epoch_ms, std::uint64_t counter) {
  return std::to_string(static_cast<std::uint64_t>(epoch_ms) * 1000u + counter % 1000u);
}

std::int64_t system_epoch_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

InstanceIdGenerator::InstanceIdGenerator() : clock_(system_epoch_ms) {}
InstanceIdGenerator::InstanceIdGenerator(Clock clock) : clock_(std::move(clock)) {}

InstanceLabel InstanceIdGenerator::next(std::string_view class_name) {
  if (class_name.empty() || is_blank(class_name))
    throw Error(ErrorCode::kInvalidArgument, "class name must not be blank");
  std::lock_guard lock(mutex_);
  const std::uint64_t counter = counter_++;
  std::uint64_t id = static_cast<std::uint64_t>(clock_()) * 1000u + counter % 1000u;
  if (last_ != 0 && id <= last_) id = last_ + 1;
  last_ = id;
  return {std::string(class_name), std::to_string(id)};
}

std::vector<Point> rescale_polygon(const std::vector<Point>& points, const BBox& old_box,
                                   const BBox& new_box) {
  if (!(old_box.w > 0.0) || !(old_box.h > 0.0))
    throw Error(ErrorCode::kDegenerateBox, "polygon reference box has no area");
  const Point scale(new_box.w / old_box.w, new_box.h / old_box.h);
  std::vector<Point> out;
  out.reserve(points.size());
  for (const Point& p : points)
    out.push_back(new_box.origin() + (p - old_box.origin()).cwiseProduct(scale));
  return out;
}

// ---------------------------------------------------------------------------

double round_to_cents(double v) { return std::round(v * 100.0) / 100.0; }

namespace {

ojson point_json(double x, double y) { return ojson::array({x, y}); }

ojson to_document(const FrameAnnotations& frame) {
  ojson shapes = ojson::array();
  for (const Annotation& a : frame.annotations) {
    const std::string label = a.label.render();
    const ojson flags = {{"tracking_enabled", a.tracking_enabled}};
    shapes.push_back({
        {"label", label},
        {"points", ojson::array({point_json(a.box.x, a.box.y),
                                 point_json(a.box.right(), a.box.bottom())})},
        {"group_id", nullptr},
        {"shape_type", "rectangle"},
        {"flags", flags},
        {"description", std::string(to_string(a.provenance))},
    });
    if (a.polygon) {
      ojson pts = ojson::array();
      for (const Point& p : *a.polygon) pts.push_back(point_json(p.x(), p.y()));
      shapes.push_back({
          {"label", label},
          {"points", std::move(pts)},
          {"group_id", nullptr},
          {"shape_type", "polygon"},
          {"flags", flags},
          {"description", std::string(to_string(a.provenance))},
      });
    }
  }
  return {
      {"version", kLabelmeVersion},
      {"flags", ojson::object()},
      {"shapes", std::move(shapes)},
      {"imagePath", frame.image_path},
      {"imageHeight", static_cast<long>(std::lround(frame.image_size.h))},
      {"imageWidth", static_cast<long>(std::lround(frame.image_size.w))},
  };
}

bool is_flat_numeric(const ojson& v) {
  return v.is_array() && !v.empty() &&
         std::all_of(v.begin(), v.end(), [](const ojson& e) { return e.is_number(); });
}

void emit(const ojson& v, std::string& out, int depth);

void emit_scalar(const ojson& v, std::string& out) {
  if (v.is_number_float()) {
    char buf[64];
    double d = v.get<double>();
    if (d == 0.0) d = 0.0;  // no "-0.00"
    std::snprintf(buf, sizeof buf, "%.2f", d);
    if (std::string_view(buf) == "-0.00") std::snprintf(buf, sizeof buf, "0.00");
    out += buf;
  } else {
    out += v.dump();
  }
}

void emit(const ojson& v, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close(static_cast<std::size_t>(depth) * 2, ' ');
  if (v.is_object()) {
    if (v.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : v.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += ojson(key).dump();
      out += ": ";
      emit(value, out, depth + 1);
    }
    out += "\n" + close + "}";
  } else if (v.is_array()) {
    if (v.empty()) {
      out += "[]";
    } else if (is_flat_numeric(v)) {
      out += "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        emit_scalar(v[i], out);
      }
      out += "]";
    } else {
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(v[i], out, depth + 1);
      }
      out += "\n" + close + "]";
    }
  } else {
    emit_scalar(v, out);
  }
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(where, std::string("missing key \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    malformed(where, std::string("key \"") + key + "\" has the wrong type");
  }
}

std::vector<Point> read_points(const nlohmann::json& shape, const std::string& where) {
  const auto it = shape.find("points");
  if (it == shape.end() || !it->is_array()) malformed(where, "missing points array");
  std::vector<Point> points;
  for (const auto& p : *it) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      malformed(where, "points must be [x, y] number pairs");
    const double x = p[0].get<double>();
    const double y = p[1].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) malformed(where, "non-finite coordinate");
    points.emplace_back(x, y);
  }
  return points;
}

BBox bounds_of(const std::vector<Point>& pts) {
  double x0 = pts[0].x(), y0 = pts[0].y(), x1 = x0, y1 = y0;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.x());
    y0 = std::min(y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  return BBox::from_corners(x0, y0, x1, y1);
}

}  // namespace

std::string serialize(const FrameAnnotations& frame) {
  std::string out;
  emit(to_document(frame), out, 0);
  out += '\n';
  return out;
}

FrameAnnotations parse_frame_annotations(std::string_view text, const std::string& origin,
                                         std::size_t frame_index) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    malformed(origin, std::string("parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) malformed(origin, "top level must be an object");

  FrameAnnotations frame;
  frame.frame_index = frame_index;
  require<std::string>(doc, "version", origin);
  if (!doc.contains("flags") || !doc["flags"].is_object()) malformed(origin, "missing flags object");
  frame.image_path = require<std::string>(doc, "imagePath", origin);
  const long height = require<long>(doc, "imageHeight", origin);
  const long width = require<long>(doc, "imageWidth", origin);
  if (height < 1 || width < 1) malformed(origin, "image size must be positive");
  frame.image_size = {double(width), double(height)};

  const auto shapes_it = doc.find("shapes");
  if (shapes_it == doc.end() || !shapes_it->is_array()) malformed(origin, "missing shapes array");

  std::vector<std::pair<std::string, std::vector<Point>>> polygons;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& shape : *shapes_it) {
    const std::string where = origin + ": shapes[" + std::to_string(index++) + "]";
    if (!shape.is_object()) malformed(where, "shape must be an object");
    const std::string label_text = require<std::string>(shape, "label", where);
    InstanceLabel label;
    try {
      label = parse_label(label_text);
    } catch (const Error& e) {
      malformed(where, e.what());
    }
    const std::string type = require<std::string>(shape, "shape_type", where);
    std::vector<Point> points = read_points(shape, where);

    bool tracking = true;
    if (auto f = shape.find("flags"); f != shape.end() && f->is_object()) {
      if (auto t = f->find("tracking_enabled"); t != f->end()) {
        if (!t->is_boolean()) malformed(where, "tracking_enabled must be a boolean");
        tracking = t->get<bool>();
      }
    }
    Provenance provenance = Provenance::kManual;
    if (auto d = shape.find("description"); d != shape.end() && d->is_string()) {
      const auto p = parse_provenance(d->get<std::string>());
      if (!p) malformed(where, "unknown provenance \"" + d->get<std::string>() + "\"");
      provenance = *p;
    }

    if (type == "rectangle") {
      if (points.size() != 2) malformed(where, "rectangle needs exactly two corner points");
      if (!seen.insert(label.instance_id).second)
        malformed(where, "duplicate instance id " + label.instance_id);
      const double x0 = std::min(points[0].x(), points[1].x());
      const double y0 = std::min(points[0].y(), points[1].y());
      const double x1 = std::max(points[0].x(), points[1].x());
      const double y1 = std::max(points[0].y(), points[1].y());
      Annotation a;
      a.label = std::move(label);
      a.box = {x0, y0, round_to_cents(x1 - x0), round_to_cents(y1 - y0)};
      a.tracking_enabled = tracking;
      a.provenance = provenance;
      frame.annotations.push_back(std::move(a));
    } else if (type == "polygon") {
      if (points.size() < 3) malformed(where, "polygon needs at least three vertices");
      polygons.emplace_back(label.render(), std::move(points));
    } else {
      malformed(where, "unsupported shape_type \"" + type + "\"");
    }
  }

  for (auto& [label_text, points] : polygons) {
    const InstanceLabel label = parse_label(label_text);
    Annotation* owner = frame.find(label.instance_id);
    if (owner == nullptr) {
      // Polygon-only instance: box is the polygon's bounding box.
      if (!seen.insert(label.instance_id).second)
        malformed(origin, "duplicate polygon for instance id " + label.instance_id);
      Annotation a;
      a.label = label;
      a.box = bounds_of(points);
      a.polygon = std::move(points);
      frame.annotations.push_back(std::move(a));
      continue;
    }
    if (owner->label.class_name != label.class_name)
      malformed(origin, "instance id " + label.instance_id + " used with two class names");
    if (owner->polygon) malformed(origin, "duplicate polygon for instance id " + label.instance_id);
    if (!contains(owner->box, bounds_of(points), 1.0))
      malformed(origin, "polygon of " + label_text + " extends beyond its box by more than 1 px");
    owner->polygon = std::move(points);
  }
  return frame;
}

FrameAnnotations normalized(const FrameAnnotations& frame) {
  return parse_frame_annotations(serialize(frame), "<normalized>", frame.frame_index);
}

// ---------------------------------------------------------------------------

void write_file_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> sequence{0};
  const fs::path tmp = path.parent_path() /
                       ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) +
                        "." + std::to_string(sequence++));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot create " + tmp.string());
  std::size_t written = 0;
  while (written < contents.size()) {
    const ssize_t n = ::write(fd, contents.data() + written, contents.size() - written);
    if (n < 0) {
      ::close(fd);
      ::unlink(tmp.c_str());
      throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::kIo, "flush failed for " + tmp.string());
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::kIo, "rename onto " + path.string() + " failed");
  }
}

FrameStore::FrameStore(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw Error(ErrorCode::kNotFound, "frames directory " + dir_.string() + " does not exist");
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && is_image_file(entry.path()))
      images_.push_back(entry.path().filename().string());
  }
  std::sort(images_.begin(), images_.end());
}

void FrameStore::check_index(std::size_t frame) const {
  if (frame >= images_.size())
    throw Error(ErrorCode::kNotFound, "frame " + std::to_string(frame) + " out of range (have " +
                                          std::to_string(images_.size()) + ")");
}

const std::string& FrameStore::image_name(std::size_t frame) const {
  check_index(frame);
  return images_[frame];
}

fs::path FrameStore::image_path(std::size_t frame) const { return dir_ / image_name(frame); }

fs::path FrameStore::annotation_path(std::size_t frame) const {
  return dir_ / (fs::path(image_name(frame)).stem().string() + ".json");
}

bool FrameStore::has_annotations(std::size_t frame) const {
  return fs::exists(annotation_path(frame));
}

std::vector<std::size_t> FrameStore::annotated_frames() const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < images_.size(); ++f)
    if (has_annotations(f)) out.push_back(f);
  return out;
}

FrameAnnotations FrameStore::load(std::size_t frame, std::vector<std::string>* warnings) const {
  const fs::path path = annotation_path(frame);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    FrameAnnotations empty;
    empty.frame_index = frame;
    empty.image_path = image_name(frame);
    empty.image_size = probe_image_size(image_path(frame));
    return empty;
  }
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  FrameAnnotations loaded = parse_frame_annotations(text, path.string(), frame);
  if (warnings) {
    const Size2D actual = probe_image_size(image_path(frame));
    if (!(actual == loaded.image_size)) {
      std::ostringstream msg;
      msg << path.string() << ": recorded image size " << loaded.image_size << " differs from actual "
          << actual;
      warnings->push_back(msg.str());
    }
  }
  return loaded;
}

void FrameStore::save(const FrameAnnotations& annotations) const {
  check_index(annotations.frame_index);
  write_file_atomic(annotation_path(annotations.frame_index), serialize(annotations));
}

std::vector<ValidationIssue> validate_directory(const fs::path& dir) {
  std::vector<ValidationIssue> issues;
  std::optional<FrameStore> store;
  try {
    store.emplace(dir);
  } catch (const Error& e) {
    issues.push_back({dir, e.what()});
    return issues;
  }

  std::set<std::string> expected;
  for (std::size_t f = 0; f < store->frame_count(); ++f) {
    const fs::path path = store->annotation_path(f);
    expected.insert(path.filename().string());
    if (!fs::exists(path)) continue;
    try {
      std::ifstream in(path, std::ios::binary);
      const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
      const FrameAnnotations frame = parse_frame_annotations(text, path.string(), f);
      if (frame.image_path != store->image_name(f))
        issues.push_back({path, "imagePath \"" + frame.image_path + "\" does not name " + store->image_name(f)});
      const Size2D actual = probe_image_size(store->image_path(f));
      if (!(actual == frame.image_size)) {
        std::ostringstream msg;
        msg << "image size " << frame.image_size << " does not match the image (" << actual << ")";
        issues.push_back({path, msg.str()});
      }
      for (const Annotation& a : frame.annotations) {
        if (!a.box.valid()) issues.push_back({path, "invalid box for " + a.label.render()});
      }
    } catch (const Error& e) {
      issues.push_back({path, e.what()});
    }
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name == kGroundTruthFile || name.starts_with(".")) continue;
    if (!expected.contains(name)) issues.push_back({entry.path(), "annotation file has no matching image"});
  }
  return issues;
}

}  // namespace annotrack

// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "annotrack/geometry.hpp"

namespace annotrack {

enum class Provenance { kManual, kTracked, kDetected, kFused };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct InstanceLabel {
  std::string class_name;
  std::string instance_id;  // decimal digits

  /// "<class_name> <instance_id>"
  std::string render() const;
  friend bool operator==(const InstanceLabel&, const InstanceLabel&) = default;
};

/// Splits at the last space. Throws kMalformedFile on anything that does not
/// round-trip through render().
InstanceLabel parse_label(std::string_view text);

struct Annotation {
  InstanceLabel label;
  BBox box;
  std::optional<std::vector<Point>> polygon;
  bool tracking_enabled = true;
  Provenance provenance = Provenance::kManual;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct FrameAnnotations {
  std::size_t frame_index = 0;
  std::string image_path;  // file name relative to the frames directory
  Size2D image_size;
  std::vector<Annotation> annotations;

  const Annotation* find(std::string_view instance_id) const;
  Annotation* find(std::string_view instance_id);
  friend bool operator==(const FrameAnnotations&, const FrameAnnotations&) = default;
};

/// Decimal id = epoch_ms * 1000 + counter % 1000.
std::string format_instance_id(std::int64_t epoch_ms, std::uint64_t counter);

/// Process-wide source of fresh instance labels. Ids are strictly increasing:
/// when more than 1000 labels are requested within one millisecond the id is
/// bumped past the previous one instead of wrapping.
class InstanceIdGenerator {
 public:
  using Clock = std::function<std::int64_t()>;  // epoch milliseconds

  InstanceIdGenerator();
  explicit InstanceIdGenerator(Clock clock);

  InstanceLabel next(std::string_view class_name);

 private:
  std::mutex mutex_;
  Clock clock_;
  std::uint64_t counter_ = 0;
  std::uint64_t last_ = 0;
};

std::int64_t system_epoch_ms();

/// Maps p from old_box to new_box, independently per axis.
std::vector<Point> rescale_polygon(const std::vector<Point>& points, const BBox& old_box,
                                   const BBox& new_box);

// ---------------------------------------------------------------------------
// JSON files (labelme layout, 2-space indent, LF, coordinates as %.2f).

double round_to_cents(double v);

/// Canonical form of what save would write: coordinates snapped to 0.01.
FrameAnnotations normalized(const FrameAnnotations& frame);

std::string serialize(const FrameAnnotations& frame);

/// Parses and checks the document. `origin` is used in error messages.
FrameAnnotations parse_frame_annotations(std::string_view text, const std::string& origin,
                                         std::size_t frame_index);

/// Frames directory: image files sorted by name, one optional "<stem>.json"
/// annotation file next to each image.
class FrameStore {
 public:
  explicit FrameStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t frame_count() const { return images_.size(); }
  const std::string& image_name(std::size_t frame) const;
  std::filesystem::path image_path(std::size_t frame) const;
  std::filesystem::path annotation_path(std::size_t frame) const;
  bool has_annotations(std::size_t frame) const;
  std::vector<std::size_t> annotated_frames() const;

  /// Missing file yields an empty annotation list for that frame.
  FrameAnnotations load(std::size_t frame, std::vector<std::string>* warnings = nullptr) const;
  /// Atomic: writes a temporary file in the same directory, then renames.
  void save(const FrameAnnotations& annotations) const;

 private:
  void check_index(std::size_t frame) const;

  std::filesystem::path dir_;
  std::vector<std::string> images_;
};

/// Writes `contents` to `path` via temp file + rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct ValidationIssue {
  std::filesystem::path file;
  std::string message;
};

/// Schema and invariant check of every annotation file in a frames directory.
std::vector<ValidationIssue> validate_directory(const std::filesystem::path& dir);

}  // namespace annotrack

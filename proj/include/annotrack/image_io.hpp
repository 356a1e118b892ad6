// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "annotrack/raster.hpp"

namespace annotrack {

/// Decodes a PNG or JPEG file (detected by signature) to 8-bit RGB.
/// Alpha is dropped; grayscale and palette images are expanded.
Frame load_image(const std::filesystem::path& path);
Frame decode_image(std::span<const std::uint8_t> encoded, const std::string& origin = "<memory>");

/// Reads only the header to obtain the dimensions.
Size2D probe_image_size(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Frame& frame);
void save_png(const Frame& frame, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

}  // namespace annotrack

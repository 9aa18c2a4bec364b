#pragma once

#include <filesystem>

#include "mosaikit/image.hpp"

namespace mosaikit {

// 8-bit grayscale PNG, intensities rounded to nearest integer on write.
// Writes go through a temporary file and an atomic rename.
void write_png_gray8(const std::filesystem::path& path, const GrayFrame& frame);

GrayFrame read_png_gray8(const std::filesystem::path& path);

}  // namespace mosaikit

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "palms/geometry.hpp"

namespace palms {

// Portable any-map writers. Rows are written from the highest y index down so
// that +y points up in viewers.

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 std::span<const std::uint16_t> row_major);
void write_pgm8(const std::filesystem::path& path, int width, int height,
                std::span<const std::uint8_t> row_major);
/// Cells != 0 are written as black (1) in a raw P4 bitmap.
void write_pbm(const std::filesystem::path& path, const RasterGrid& grid);
/// Min-max quantized 8-bit graymap.
void write_grid_pgm8(const std::filesystem::path& path, const RasterGrid& grid);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};
void write_ppm(const std::filesystem::path& path, int width, int height,
               std::span<const Rgb> row_major);

}  // namespace palms

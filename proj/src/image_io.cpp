#include "palms/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace palms {

namespace {

std::ofstream open_binary(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void check_size(int width, int height, std::size_t n) {
  if (width < 1 || height < 1 ||
      n != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("image size does not match buffer");
  }
}

}  // namespace

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 std::span<const std::uint16_t> row_major) {
  check_size(width, height, row_major.size());
  auto out = open_binary(path);
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<char> row(static_cast<std::size_t>(width) * 2);
  for (int iy = height - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < width; ++ix) {
      const std::uint16_t v = row_major[static_cast<std::size_t>(iy) * width + ix];
      row[2 * ix] = static_cast<char>(v >> 8);  // big-endian
      row[2 * ix + 1] = static_cast<char>(v & 0xff);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_pgm8(const std::filesystem::path& path, int width, int height,
                std::span<const std::uint8_t> row_major) {
  check_size(width, height, row_major.size());
  auto out = open_binary(path);
  out << "P5\n" << width << " " << height << "\n255\n";
  for (int iy = height - 1; iy >= 0; --iy) {
    out.write(reinterpret_cast<const char*>(row_major.data()) + static_cast<std::size_t>(iy) * width,
              width);
  }
}

void write_pbm(const std::filesystem::path& path, const RasterGrid& grid) {
  auto out = open_binary(path);
  const int w = grid.width();
  const int h = grid.height();
  out << "P4\n" << w << " " << h << "\n";
  std::vector<char> row(static_cast<std::size_t>((w + 7) / 8));
  for (int iy = h - 1; iy >= 0; --iy) {
    std::fill(row.begin(), row.end(), 0);
    for (int ix = 0; ix < w; ++ix) {
      if (grid.at(ix, iy) != 0.0) row[ix / 8] = static_cast<char>(row[ix / 8] | (0x80 >> (ix % 8)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_grid_pgm8(const std::filesystem::path& path, const RasterGrid& grid) {
  const double lo = grid.min_value();
  const double hi = grid.max_value();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::vector<std::uint8_t> px(grid.values().size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::lround((grid.values()[i] - lo) * scale));
  }
  write_pgm8(path, grid.width(), grid.height(), px);
}

void write_ppm(const std::filesystem::path& path, int width, int height,
               std::span<const Rgb> row_major) {
  check_size(width, height, row_major.size());
  auto out = open_binary(path);
  out << "P6\n" << width << " " << height << "\n255\n";
  for (int iy = height - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < width; ++ix) {
      const Rgb& c = row_major[static_cast<std::size_t>(iy) * width + ix];
      const char px[3] = {static_cast<char>(c.r), static_cast<char>(c.g), static_cast<char>(c.b)};
      out.write(px, 3);
    }
  }
}

}  // namespace palms

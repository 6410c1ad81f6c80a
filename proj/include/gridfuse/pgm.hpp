#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <fmt/format.h>

#include "gridfuse/error.hpp"
#include "gridfuse/grid.hpp"

namespace gridfuse {

[[nodiscard]] inline std::filesystem::path pgm_sidecar(const std::filesystem::path& pgm) {
  return std::filesystem::path(pgm.string() + ".txt");
}

// 16-bit binary greymap of p * 65535, top row = highest y, plus a sidecar
// text file holding the grid geometry.
inline void write_pgm(const std::filesystem::path& path, const ProbabilityGrid& probs) {
  const GridSpec& s = probs.spec();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << s.width_cells << ' ' << s.height_cells << "\n65535\n";
  for (int j = s.height_cells - 1; j >= 0; --j) {
    for (int i = 0; i < s.width_cells; ++i) {
      const double p = std::clamp(probs[{i, j}], 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(p * 65535.0));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(bytes, 2);
    }
  }
  std::ofstream side(pgm_sidecar(path));
  side << fmt::format("width_cells {}\nheight_cells {}\nresolution {:.17g}\norigin_x {:.17g}\norigin_y {:.17g}\n",
                      s.width_cells, s.height_cells, s.resolution, s.origin_x, s.origin_y);
}

[[nodiscard]] inline ProbabilityGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream side(pgm_sidecar(path));
  std::string key;
  int w = 0, h = 0;
  double res = 0.0, ox = 0.0, oy = 0.0;
  while (side >> key) {
    if (key == "width_cells") side >> w;
    else if (key == "height_cells") side >> h;
    else if (key == "resolution") side >> res;
    else if (key == "origin_x") side >> ox;
    else if (key == "origin_y") side >> oy;
  }
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int pw = 0, ph = 0, maxval = 0;
  in >> magic >> pw >> ph >> maxval;
  in.get();
  if (!in || magic != "P5" || maxval != 65535) throw ParseError("not a 16-bit P5 greymap: " + path.string());
  if (w == 0) {
    w = pw;
    h = ph;
    res = 1.0;
  }
  if (pw != w || ph != h) throw ParseError("greymap size disagrees with its sidecar");
  ProbabilityGrid g(GridSpec(w, h, res, ox, oy), 0.0);
  for (int j = h - 1; j >= 0; --j) {
    for (int i = 0; i < w; ++i) {
      unsigned char b[2];
      in.read(reinterpret_cast<char*>(b), 2);
      g[{i, j}] = ((b[0] << 8) | b[1]) / 65535.0;
    }
  }
  if (!in) throw ParseError("truncated greymap: " + path.string());
  return g;
}

}  // namespace gridfuse

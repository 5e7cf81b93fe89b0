// Copyright 2026 The goalstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file io.hpp
/// \brief File formats: text and JSON files, 8/16-bit PGM rasters, raw f32
/// matrices, trajectory CSV and a minimal CSV-to-SVG line plot.

#ifndef GOALSTACK__IO_HPP_
#define GOALSTACK__IO_HPP_

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"

namespace goalstack
{

namespace fs = std::filesystem;

inline std::string read_text_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const fs::path & path, const std::string & content)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write '" + path.string() + "'");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline nlohmann::json read_json_file(const fs::path & path)
{
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline void write_json_file(const fs::path & path, const nlohmann::json & j)
{
  write_text_file(path, j.dump(2) + "\n");
}

inline std::string hex64(std::uint64_t v)
{
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

/// Appends one compact JSON document per line.
class JsonlWriter
{
public:
  void add(const nlohmann::json & j) { buf_ += j.dump() + "\n"; }
  const std::string & str() const { return buf_; }

private:
  std::string buf_;
};

// ---------------------------------------------------------------------------
// PGM

/// Binary PGM (P5). Row 0 of the image is the top (largest y) grid row.
/// Values are clamped to the format range; 16-bit samples are big-endian.
inline std::string encode_pgm(const LabelGrid & g, bool sixteen_bit)
{
  const int maxval = sixteen_bit ? 65535 : 255;
  std::string out = "P5\n" + std::to_string(g.spec.width) + " " + std::to_string(g.spec.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (int r = 0; r < g.spec.height; ++r) {
    const int iy = g.spec.height - 1 - r;
    for (int ix = 0; ix < g.spec.width; ++ix) {
      const int v = std::clamp<std::int64_t>(g.at(ix, iy), 0, maxval);
      if (sixteen_bit) {
        out.push_back(static_cast<char>((v >> 8) & 0xff));
      }
      out.push_back(static_cast<char>(v & 0xff));
    }
  }
  return out;
}

/// Inverse of encode_pgm; the returned spec keeps the default extent with the
/// decoded width and height unless `spec` is given.
inline LabelGrid decode_pgm(const std::string & buf, const GridSpec * spec = nullptr)
{
  std::istringstream in(buf);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || (maxval != 255 && maxval != 65535)) {
    throw ConfigError("unsupported PGM header");
  }
  in.get();
  GridSpec g = spec ? *spec : GridSpec{};
  if (g.width != w || g.height != h) {
    if (spec) throw ConfigError("PGM size does not match the grid");
    g.width = w;
    g.height = h;
  }
  LabelGrid out(g);
  const bool wide = maxval == 65535;
  for (int r = 0; r < h; ++r) {
    for (int ix = 0; ix < w; ++ix) {
      int v = 0;
      if (wide) {
        const int hi = in.get();
        const int lo = in.get();
        v = (hi << 8) | lo;
      } else {
        v = in.get();
      }
      if (!in) throw ConfigError("truncated PGM data");
      out.at(ix, h - 1 - r) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Raw f32

/// Header line "GSF32 rows cols\n" followed by row-major little-endian floats.
inline std::string encode_f32(const Eigen::MatrixXd & m)
{
  std::string out = "GSF32 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float f = static_cast<float>(m(r, c));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
  return out;
}

inline Eigen::MatrixXd decode_f32(const std::string & buf)
{
  const auto nl = buf.find('\n');
  if (nl == std::string::npos || buf.compare(0, 6, "GSF32 ") != 0) {
    throw ConfigError("not a GSF32 file");
  }
  std::istringstream hdr(buf.substr(6, nl - 6));
  long rows = -1, cols = -1;
  hdr >> rows >> cols;
  if (rows < 0 || cols < 0 || buf.size() - nl - 1 != static_cast<std::size_t>(rows * cols * 4)) {
    throw ConfigError("GSF32 size mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  const auto * p = reinterpret_cast<const unsigned char *>(buf.data() + nl + 1);
  for (long i = 0; i < rows * cols; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
    float f;
    std::memcpy(&f, &bits, 4);
    m(i / cols, i % cols) = f;
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> split_csv_line(const std::string & line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  std::string tail = line;
  tail.erase(tail.find_last_not_of(" \t\r") + 1);
  if (!tail.empty() && tail.back() == ',') {
    out.emplace_back();
  }
  return out;
}

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string & text)
{
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto & c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c, &used));
        if (!c.empty() && used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception &) {
        throw ConfigError("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) {
    throw ConfigError("CSV has no header");
  }
  return t;
}

inline std::string format_double(double v)
{
  if (!std::isfinite(v)) return "";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

/// Trajectory CSV with header "t,x,y"; t is the waypoint index.
inline Trajectory read_trajectory_csv(const std::string & text)
{
  const CsvTable t = parse_csv(text);
  if (t.header != std::vector<std::string>{"t", "x", "y"}) {
    throw ConfigError("trajectory CSV header must be t,x,y");
  }
  Trajectory x(static_cast<Eigen::Index>(t.rows.size()), 2);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!std::isfinite(t.rows[i][1]) || !std::isfinite(t.rows[i][2])) {
      throw ConfigError("trajectory CSV contains a non-finite coordinate");
    }
    x(static_cast<Eigen::Index>(i), 0) = t.rows[i][1];
    x(static_cast<Eigen::Index>(i), 1) = t.rows[i][2];
  }
  return x;
}

inline std::string write_trajectory_csv(const Trajectory & x)
{
  std::string out = "t,x,y\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out += std::to_string(i) + "," + format_double(x(i, 0)) + "," + format_double(x(i, 1)) + "\n";
  }
  return out;
}

/// Line plot of every column against the first.
inline std::string csv_to_svg(const CsvTable & t, const std::string & title = "")
{
  if (t.header.size() < 2 || t.rows.empty()) {
    throw ConfigError("plot needs an x column, at least one series and one row");
  }
  constexpr double W = 640, H = 400, M = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto & r : t.rows) {
    if (std::isfinite(r[0])) {
      x0 = std::min(x0, r[0]);
      x1 = std::max(x1, r[0]);
    }
    for (std::size_t c = 1; c < r.size(); ++c) {
      if (std::isfinite(r[c])) {
        y0 = std::min(y0, r[c]);
        y1 = std::max(y1, r[c]);
      }
    }
  }
  if (!std::isfinite(x0) || !std::isfinite(y0)) {
    throw ConfigError("plot has no finite data");
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  static const char * colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream s;
  s << std::setprecision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << M << "\" y=\"" << H - M + 18 << "\" font-size=\"11\">" << x0 << "</text>\n";
  s << "<text x=\"" << W - M << "\" y=\"" << H - M + 18 << "\" font-size=\"11\" text-anchor=\"end\">" << x1 << "</text>\n";
  s << "<text x=\"" << M - 4 << "\" y=\"" << H - M << "\" font-size=\"11\" text-anchor=\"end\">" << y0 << "</text>\n";
  s << "<text x=\"" << M - 4 << "\" y=\"" << M + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << y1 << "</text>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">" << t.header[0] << "</text>\n";
  if (!title.empty()) {
    s << "<text x=\"" << W / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
  }
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    const char * col = colors[(c - 1) % 6];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto & r : t.rows) {
      if (!std::isfinite(r[0]) || !std::isfinite(r[c])) continue;
      s << (first ? "" : " ") << px(r[0]) << "," << py(r[c]);
      first = false;
    }
    s << "\"/>\n";
    s << "<text x=\"" << W - M + 4 << "\" y=\"" << M + 14 * static_cast<double>(c) << "\" font-size=\"11\" fill=\"" << col
      << "\">" << t.header[c] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace goalstack

#endif  // GOALSTACK__IO_HPP_

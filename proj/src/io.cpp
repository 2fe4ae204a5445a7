#include "sigkex/io.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace sigkex {

namespace {

std::vector<double> parse_csv_row(const std::string& line,
                                  const std::string& name, std::size_t lineno) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    const std::string cell = line.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
      while (used < cell.size() &&
             (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
        ++used;
      if (used != cell.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw ParseError(name + ":" + std::to_string(lineno) +
                       ": cannot parse '" + cell + "' as a number");
    }
    pos = comma + 1;
    if (comma == line.size()) break;
  }
  return row;
}

}  // namespace

PiecewiseLinearPath read_path_csv(std::istream& in, bool header,
                                  const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> data;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header && lineno == 1) continue;
    auto row = parse_csv_row(line, name, lineno);
    if (dim == 0) {
      dim = row.size();
    } else if (row.size() != dim) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dim) + " columns, found " +
                       std::to_string(row.size()));
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  if (dim == 0) throw ParseError(name + ": no data rows");
  if (data.size() / dim < 2)
    throw ParseError(name + ": a path needs at least two rows");
  return {std::move(data), dim};
}

PiecewiseLinearPath read_path_csv_file(const std::string& filename,
                                       bool header) {
  std::ifstream in(filename);
  if (!in) throw ParseError(filename + ": cannot open file");
  return read_path_csv(in, header, filename);
}

void write_path_csv(std::ostream& out, const PiecewiseLinearPath& path,
                    bool header) {
  if (header) {
    for (std::size_t c = 0; c < path.dim(); ++c)
      out << (c ? ",x" : "x") << (c + 1);
    out << '\n';
  }
  char buf[32];
  for (std::size_t p = 0; p < path.num_points(); ++p) {
    for (std::size_t c = 0; c < path.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", path.at(p, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_path_csv_file(const std::string& filename,
                         const PiecewiseLinearPath& path, bool header) {
  std::ofstream out(filename);
  if (!out) throw ParseError(filename + ": cannot open file for writing");
  write_path_csv(out, path, header);
}

PiecewiseLinearPath path_from_json(const nlohmann::json& j) {
  if (!j.contains("points") || !j["points"].is_array())
    throw ParseError("path literal needs a 'points' array");
  std::vector<double> data;
  std::size_t dim = 0;
  for (const auto& point : j["points"]) {
    if (!point.is_array())
      throw ParseError("each point must be an array of numbers");
    if (dim == 0)
      dim = point.size();
    else if (point.size() != dim)
      throw ParseError("points have inconsistent dimensions");
    for (const auto& v : point) data.push_back(v.get<double>());
  }
  if (dim == 0 || data.size() / dim < 2)
    throw ParseError("a path literal needs at least two points");
  return {std::move(data), dim};
}

nlohmann::json path_to_json(const PiecewiseLinearPath& path) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t p = 0; p < path.num_points(); ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < path.dim(); ++c) row.push_back(path.at(p, c));
    points.push_back(std::move(row));
  }
  return nlohmann::json{{"points", std::move(points)}};
}

PathKind parse_path_kind(const std::string& name) {
  if (name == "random-uniform") return PathKind::random_uniform;
  if (name == "axis") return PathKind::axis;
  if (name == "linear") return PathKind::linear;
  throw ParseError("unknown path kind '" + name + "'");
}

PiecewiseLinearPath generate_path(PathKind kind, std::size_t L, std::size_t d,
                                  std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("dimension must be >= 1");
  switch (kind) {
    case PathKind::axis:
      return axis_path(d);
    case PathKind::linear: {
      if (L == 0) throw std::invalid_argument("length must be >= 1");
      std::vector<double> pts((L + 1) * d);
      for (std::size_t p = 0; p <= L; ++p)
        for (std::size_t c = 0; c < d; ++c)
          pts[p * d + c] =
              static_cast<double>(p) / static_cast<double>(L);
      return {std::move(pts), d};
    }
    case PathKind::random_uniform: {
      if (L == 0) throw std::invalid_argument("length must be >= 1");
      std::mt19937_64 rng(seed);
      std::vector<double> pts((L + 1) * d);
      // 53-bit mantissa draw; bit-reproducible across platforms, unlike
      // std::uniform_real_distribution.
      for (double& v : pts)
        v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      return {std::move(pts), d};
    }
  }
  throw std::invalid_argument("unknown path kind");
}

}  // namespace sigkex

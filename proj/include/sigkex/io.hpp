#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sigkex/path.hpp"

namespace sigkex {

// Malformed input data; the CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV streams: one row per time point, one column per channel. `header`
// skips the first row on read and emits channel names on write.
PiecewiseLinearPath read_path_csv(std::istream& in, bool header,
                                  const std::string& name = "<stream>");
PiecewiseLinearPath read_path_csv_file(const std::string& filename,
                                       bool header);
void write_path_csv(std::ostream& out, const PiecewiseLinearPath& path,
                    bool header);
void write_path_csv_file(const std::string& filename,
                         const PiecewiseLinearPath& path, bool header);

// JSON path literal {"points": [[...], ...]}.
PiecewiseLinearPath path_from_json(const nlohmann::json& j);
nlohmann::json path_to_json(const PiecewiseLinearPath& path);

enum class PathKind { random_uniform, axis, linear };

PathKind parse_path_kind(const std::string& name);

// Deterministic path generation from a named generator (mt19937_64).
// random_uniform draws each point i.i.d. uniform on [0,1]^d; axis ignores L
// and returns the d-dimensional axis path; linear runs t*(1,..,1) over L
// segments.
PiecewiseLinearPath generate_path(PathKind kind, std::size_t L, std::size_t d,
                                  std::uint64_t seed);

}  // namespace sigkex

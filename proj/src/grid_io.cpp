#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "mcgrad/error.hpp"
#include "mcgrad/fd2d_solver.hpp"

namespace mcgrad::fd2d {

namespace {

constexpr const char* kMagic = "MCGRAD-GRID v1";

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(std::string("grid file: missing ") + what);
  T v{};
  auto res = std::from_chars(line.data(), line.data() + line.size(), v);
  if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
    throw ConfigError(std::string("grid file: malformed ") + what + ": '" + line + "'");
  }
  return v;
}

}  // namespace

void write_grid(std::ostream& os, const GridSolution& sol) {
  if (sol.u.size() != static_cast<std::size_t>(sol.nx) * sol.ny) {
    throw ParameterError("grid field size does not match nx * ny");
  }
  os << kMagic << '\n'
     << sol.nx << '\n'
     << sol.ny << '\n'
     << shortest(sol.h) << '\n'
     << shortest(sol.R_dom) << '\n'
     << '\n';
  char bytes[8];
  for (double v : sol.u) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    os.write(bytes, 8);
  }
}

void write_grid_file(const std::string& path, const GridSolution& sol) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_grid(os, sol);
  if (!os) throw std::runtime_error("write failed: " + path);
}

GridSolution read_grid(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw ConfigError("grid file: bad magic");
  GridSolution sol;
  sol.nx = parse_line<int>(is, "nx");
  sol.ny = parse_line<int>(is, "ny");
  sol.h = parse_line<double>(is, "h");
  sol.R_dom = parse_line<double>(is, "R_dom");
  if (sol.nx < 3 || sol.ny < 3 || !(sol.h > 0.0) || !(sol.R_dom > 0.0)) {
    throw ConfigError("grid file: invalid header values");
  }
  if (!std::getline(is, line) || !line.empty()) throw ConfigError("grid file: missing blank line");
  const std::size_t count = static_cast<std::size_t>(sol.nx) * sol.ny;
  sol.u.resize(count);
  unsigned char bytes[8];
  for (std::size_t k = 0; k < count; ++k) {
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("grid file: truncated data");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    sol.u[k] = std::bit_cast<double>(bits);
  }
  for (int j = 0; j < sol.ny; ++j) {
    for (int i = 0; i < sol.nx; ++i) {
      if (i == 0 || j == 0 || i == sol.nx - 1 || j == sol.ny - 1) {
        sol.boundary.push_back(sol.at(i, j));
      }
    }
  }
  sol.converged = false;
  sol.residual_norm = std::numeric_limits<double>::quiet_NaN();
  return sol;
}

GridSolution read_grid_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open grid file " + path);
  return read_grid(is);
}

}  // namespace mcgrad::fd2d

#include "formfind/harness/export.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <sstream>

#include "formfind/errors.hpp"

namespace formfind::harness {

namespace {

std::string fixed6(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6f", v);
  if (std::strcmp(buf.data(), "-0.000000") == 0) return "0.000000";
  return buf.data();
}

}  // namespace

void write_obj(std::ostream& out, const Topology& topology, const Points& positions) {
  if (positions.rows() != topology.num_nodes()) {
    throw InvalidArgument("positions must have one row per node");
  }
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    out << "v " << fixed6(positions(i, 0)) << ' ' << fixed6(positions(i, 1)) << ' '
        << fixed6(positions(i, 2)) << '\n';
  }
  for (const auto& bar : topology.bars()) out << "l " << bar.a + 1 << ' ' << bar.b + 1 << '\n';
}

std::string obj_string(const Topology& topology, const Points& positions) {
  std::ostringstream out;
  write_obj(out, topology, positions);
  return out.str();
}

}  // namespace formfind::harness

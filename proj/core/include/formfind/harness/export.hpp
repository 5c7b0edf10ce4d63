#pragma once

#include <iosfwd>
#include <string>

#include "formfind/structure.hpp"
#include "formfind/types.hpp"

namespace formfind::harness {

/// Wavefront OBJ of a bar system: one `v x y z` line per node (fixed six
/// decimals, negative zero printed as 0.000000), then one `l a b` line per
/// bar with 1-based node indices.
void write_obj(std::ostream& out, const Topology& topology, const Points& positions);
std::string obj_string(const Topology& topology, const Points& positions);

}  // namespace formfind::harness

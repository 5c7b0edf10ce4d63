#include "formfind/structure.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "formfind/errors.hpp"

namespace formfind {

Topology::Topology(int num_nodes, std::vector<Bar> bars, std::vector<int> fixed)
    : num_nodes_(num_nodes), bars_(std::move(bars)), fixed_(std::move(fixed)) {
  if (num_nodes_ <= 0) {
    throw InvalidArgument("topology needs at least one node");
  }
  free_slot_.assign(num_nodes_, -1);
  fixed_slot_.assign(num_nodes_, -1);
  incident_.assign(num_nodes_, {});

  for (std::size_t s = 0; s < fixed_.size(); ++s) {
    const int node = fixed_[s];
    if (node < 0 || node >= num_nodes_) {
      throw InvalidArgument("fixed node index out of range: " + std::to_string(node));
    }
    if (fixed_slot_[node] >= 0) {
      throw InvalidArgument("fixed node listed twice: " + std::to_string(node));
    }
    fixed_slot_[node] = static_cast<int>(s);
  }
  for (int node = 0; node < num_nodes_; ++node) {
    if (fixed_slot_[node] < 0) {
      free_slot_[node] = static_cast<int>(free_.size());
      free_.push_back(node);
    }
  }

  std::set<std::pair<int, int>> seen;
  for (std::size_t m = 0; m < bars_.size(); ++m) {
    const auto [a, b] = bars_[m];
    if (a < 0 || a >= num_nodes_ || b < 0 || b >= num_nodes_) {
      throw InvalidArgument("bar " + std::to_string(m) + " references an invalid node");
    }
    if (a == b) {
      throw InvalidArgument("bar " + std::to_string(m) + " joins a node to itself");
    }
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second) {
      throw InvalidArgument("duplicate bar between nodes " + std::to_string(a) + " and " +
                            std::to_string(b));
    }
    incident_[a].push_back(static_cast<int>(m));
    incident_[b].push_back(static_cast<int>(m));
  }
  for (int node : free_) {
    if (incident_[node].empty()) {
      throw InvalidArgument("free node " + std::to_string(node) + " has no incident bar");
    }
  }
}

Vector BoundaryConditions::flatten() const {
  Vector b(3 * anchors.rows() + loads.rows());
  for (Eigen::Index s = 0; s < anchors.rows(); ++s) {
    b.segment<3>(3 * s) = anchors.row(s).transpose();
  }
  b.tail(loads.rows()) = loads.col(2);
  return b;
}

void check_boundary_conditions(const Topology& topology, const BoundaryConditions& bc) {
  if (bc.anchors.rows() != topology.num_fixed()) {
    throw InvalidArgument("expected " + std::to_string(topology.num_fixed()) +
                          " anchor rows, got " + std::to_string(bc.anchors.rows()));
  }
  if (bc.loads.rows() != topology.num_nodes()) {
    throw InvalidArgument("expected " + std::to_string(topology.num_nodes()) +
                          " load rows, got " + std::to_string(bc.loads.rows()));
  }
}

void ForceDensities::validate() const {
  if (values.size() != signs.size()) {
    throw InvalidArgument("force densities and signs differ in length");
  }
  if (!(shift >= 0.0)) {
    throw InvalidArgument("shift must be non-negative");
  }
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    const double s = signs[m];
    if (s != 1.0 && s != -1.0) {
      throw InvalidArgument("sign entries must be +1 or -1");
    }
    if (values[m] * s <= 0.0 || std::abs(values[m]) < shift) {
      throw InvalidArgument("force density " + std::to_string(m) +
                            " violates its sign or shift bound");
    }
  }
}

Topology build_grid_shell_topology(int grid_side) {
  const int g = grid_side;
  if (g < 2) {
    throw InvalidArgument("grid side must be at least 2");
  }
  std::vector<Bar> bars;
  bars.reserve(2 * g * (g - 1));
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c + 1 < g; ++c) {
      bars.push_back({r * g + c, r * g + c + 1});
    }
  }
  for (int r = 0; r + 1 < g; ++r) {
    for (int c = 0; c < g; ++c) {
      bars.push_back({r * g + c, (r + 1) * g + c});
    }
  }
  std::vector<int> fixed;
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      if (r == 0 || c == 0 || r == g - 1 || c == g - 1) {
        fixed.push_back(r * g + c);
      }
    }
  }
  return Topology(g * g, std::move(bars), std::move(fixed));
}

Topology build_tower_topology(int num_rings, int points_per_ring) {
  const int d = num_rings;
  const int k = points_per_ring;
  if (d < 2 || k < 3) {
    throw InvalidArgument("tower needs at least 2 rings of at least 3 points");
  }
  std::vector<Bar> bars;
  bars.reserve(k * (2 * d - 1));
  for (int ring = 0; ring < d; ++ring) {
    for (int p = 0; p < k; ++p) {
      bars.push_back({ring * k + p, ring * k + (p + 1) % k});
    }
  }
  for (int ring = 0; ring + 1 < d; ++ring) {
    for (int p = 0; p < k; ++p) {
      bars.push_back({ring * k + p, (ring + 1) * k + p});
    }
  }
  std::vector<int> fixed;
  for (int p = 0; p < k; ++p) fixed.push_back(p);
  for (int p = 0; p < k; ++p) fixed.push_back((d - 1) * k + p);
  return Topology(d * k, std::move(bars), std::move(fixed));
}

int grid_side_of(const Topology& topology) {
  const int n = topology.num_nodes();
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (g * g != n || g < 2) {
    throw InvalidArgument("topology with " + std::to_string(n) + " nodes is not a square grid");
  }
  return g;
}

Points shell_loads(const Topology& topology, double plan_width, double area_load) {
  const int g = grid_side_of(topology);
  const double spacing = plan_width / (g - 1);
  auto strip = [&](int i) { return (i == 0 || i == g - 1) ? 0.5 * spacing : spacing; };

  Points loads = Points::Zero(topology.num_nodes(), 3);
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      loads(r * g + c, 2) = -area_load * strip(r) * strip(c);
    }
  }
  return loads;
}

Points tower_loads(const Topology& topology) {
  return Points::Zero(topology.num_nodes(), 3);
}

namespace {

nlohmann::json rows_to_json(const Points& pts) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    out.push_back({pts(i, 0), pts(i, 1), pts(i, 2)});
  }
  return out;
}

Points rows_from_json(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) {
    throw InvalidArgument(std::string("structure field '") + field + "' must be an array");
  }
  Points pts(static_cast<Eigen::Index>(arr.size()), 3);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& row = arr[i];
    if (!row.is_array() || row.size() != 3) {
      throw InvalidArgument(std::string("structure field '") + field + "' needs [x,y,z] rows");
    }
    for (int d = 0; d < 3; ++d) pts(static_cast<Eigen::Index>(i), d) = row[d].get<double>();
  }
  return pts;
}

}  // namespace

nlohmann::json structure_to_json(const Topology& topology, const Points& nodes,
                                 const Points& loads) {
  nlohmann::json bars = nlohmann::json::array();
  for (const auto& bar : topology.bars()) bars.push_back({bar.a, bar.b});
  nlohmann::json fixed(std::vector<int>(topology.fixed().begin(), topology.fixed().end()));
  return {{"nodes", rows_to_json(nodes)},
          {"bars", std::move(bars)},
          {"fixed", std::move(fixed)},
          {"loads", rows_to_json(loads)}};
}

StructureDocument structure_from_json(const nlohmann::json& doc) {
  for (const char* key : {"nodes", "bars", "fixed", "loads"}) {
    if (!doc.contains(key)) {
      throw InvalidArgument(std::string("structure document is missing '") + key + "'");
    }
  }
  for (const auto& item : doc.items()) {
    if (item.key() != "nodes" && item.key() != "bars" && item.key() != "fixed" &&
        item.key() != "loads") {
      throw InvalidArgument("unknown structure field '" + item.key() + "'");
    }
  }
  Points nodes = rows_from_json(doc["nodes"], "nodes");
  Points loads = rows_from_json(doc["loads"], "loads");
  std::vector<Bar> bars;
  for (const auto& bar : doc["bars"]) {
    if (!bar.is_array() || bar.size() != 2) {
      throw InvalidArgument("structure field 'bars' needs [i,j] pairs");
    }
    bars.push_back({bar[0].get<int>(), bar[1].get<int>()});
  }
  auto fixed = doc["fixed"].get<std::vector<int>>();
  Topology topology(static_cast<int>(nodes.rows()), std::move(bars), std::move(fixed));
  if (loads.rows() != nodes.rows()) {
    throw InvalidArgument("structure 'loads' must have one row per node");
  }
  return {std::move(topology), std::move(nodes), std::move(loads)};
}

}  // namespace formfind

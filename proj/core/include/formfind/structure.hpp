#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "formfind/types.hpp"

namespace formfind {

struct Bar {
  int a = 0;
  int b = 0;
};

/// Node/bar incidence of a pin-jointed bar system with a fixed/free split.
///
/// Free nodes are the complement of `fixed`, kept in ascending node order.
/// Construction validates that bars reference distinct, valid nodes, that no
/// unordered pair appears twice and that every free node has a bar.
class Topology {
 public:
  Topology(int num_nodes, std::vector<Bar> bars, std::vector<int> fixed);

  int num_nodes() const noexcept { return num_nodes_; }
  int num_bars() const noexcept { return static_cast<int>(bars_.size()); }
  int num_fixed() const noexcept { return static_cast<int>(fixed_.size()); }
  int num_free() const noexcept { return static_cast<int>(free_.size()); }

  std::span<const Bar> bars() const noexcept { return bars_; }
  std::span<const int> fixed() const noexcept { return fixed_; }
  std::span<const int> free() const noexcept { return free_; }

  /// Row of `node` inside the free block, or -1 when the node is fixed.
  int free_slot(int node) const { return free_slot_.at(node); }
  /// Row of `node` inside the anchor block, or -1 when the node is free.
  int fixed_slot(int node) const { return fixed_slot_.at(node); }
  bool is_fixed(int node) const { return fixed_slot_.at(node) >= 0; }

  std::span<const int> incident_bars(int node) const { return incident_.at(node); }

  /// Length of the flattened boundary-condition vector, 3*N_s + N.
  int boundary_vector_size() const noexcept { return 3 * num_fixed() + num_nodes(); }

 private:
  int num_nodes_;
  std::vector<Bar> bars_;
  std::vector<int> fixed_;
  std::vector<int> free_;
  std::vector<int> free_slot_;
  std::vector<int> fixed_slot_;
  std::vector<std::vector<int>> incident_;
};

/// Anchor positions (rows follow Topology::fixed()) and nodal loads (N rows).
struct BoundaryConditions {
  Points anchors;
  Points loads;

  /// Anchor coordinates row by row followed by the vertical load of every
  /// node; this is the `b` vector fed to the learnable decoders.
  Vector flatten() const;
};

void check_boundary_conditions(const Topology& topology, const BoundaryConditions& bc);

/// Signed per-bar force densities q = s * |q| with |q| >= shift.
struct ForceDensities {
  Vector values;
  Vector signs;
  double shift = 0.0;

  /// Throws InvalidArgument if a sign or the shift bound is violated.
  void validate() const;
};

struct EquilibriumState {
  Points positions;  // N x 3
  Vector forces;     // f_m = q_m * l_m
  Vector lengths;    // strictly positive
  Points residuals;  // N_u x 3, recomputed from the solved positions
};

/// G x G grid, row-major nodes (node = row * G + col), perimeter fixed.
/// Bars: all bars along a row first (row by row), then all bars along a column.
Topology build_grid_shell_topology(int grid_side);

/// D rings of k points, ring-major from the bottom (node = ring * k + point).
/// Bars: circumferential bars ring by ring, then vertical bars between
/// consecutive rings. Bottom and top rings are fixed.
Topology build_tower_topology(int num_rings, int points_per_ring);

/// Side length G of a grid-shell topology; throws if N is not a square.
int grid_side_of(const Topology& topology);

/// Vertical nodal loads from a uniform area load lumped by plan tributary
/// area on the undeformed w x w grid.
Points shell_loads(const Topology& topology, double plan_width, double area_load);

/// Towers carry no external load.
Points tower_loads(const Topology& topology);

/// Structure document: { "nodes", "bars", "fixed", "loads" }.
struct StructureDocument {
  Topology topology;
  Points nodes;
  Points loads;
};

nlohmann::json structure_to_json(const Topology& topology, const Points& nodes,
                                 const Points& loads);
StructureDocument structure_from_json(const nlohmann::json& doc);

}  // namespace formfind

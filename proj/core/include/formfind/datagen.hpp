#pragma once

#include <array>
#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "formfind/losses.hpp"
#include "formfind/structure.hpp"
#include "formfind/types.hpp"

namespace formfind {

/// Bicubic Bezier control net. Point (e, g) is stored at index 4 * e + g; e
/// runs along u (x) and g along v (y). The reference net spans
/// [-w/2, w/2]^2 at x, y in {-w/2, -w/6, w/6, w/2}.
struct BezierControlGrid {
  std::array<Vec3, 16> points{};
  double plan_width = 10.0;

  Vec3& at(int e, int g) { return points[static_cast<std::size_t>(4 * e + g)]; }
  const Vec3& at(int e, int g) const { return points[static_cast<std::size_t>(4 * e + g)]; }
};

/// Cubic Bernstein weights (1-t)^3, 3t(1-t)^2, 3t^2(1-t), t^3.
std::array<double, 4> bernstein3(double t);

Vec3 bezier_point(const BezierControlGrid& grid, double u, double v);

/// Reference (undisplaced) net: all points at z = 0.
BezierControlGrid flat_controls(double plan_width);

/// Translation bounds of one control-point class for the positive quadrant.
struct TranslationBounds {
  Vec3 lower;
  Vec3 upper;
  bool movable = true;
};

/// Class bounds for control point (e, g), with x/y bounds mirrored into the
/// point's quadrant.
TranslationBounds control_point_bounds(int e, int g, double plan_width);

/// Moves c1..c3 of the positive quadrant by uniform translations and mirrors
/// the quarter across the xz and yz planes.
BezierControlGrid sample_symmetric_controls(std::uint64_t seed, double plan_width);

/// Moves every non-corner point independently within its class bounds.
BezierControlGrid sample_asymmetric_controls(std::uint64_t seed, double plan_width);

/// (1 - delta) * sym + delta * asym.
BezierControlGrid interpolate_controls(const BezierControlGrid& sym,
                                       const BezierControlGrid& asym, double delta);

/// Max deviation from mirror symmetry across the xz and yz planes.
double mirror_symmetry_error(const BezierControlGrid& grid);

struct ShellInstance {
  ShapeTarget target;
  BoundaryConditions bc;
};

/// Evaluates the patch on the G x G (u, v) lattice including the endpoints,
/// row-major with u along columns. Perimeter points become anchors.
ShellInstance shell_target_from_controls(const BezierControlGrid& grid, int grid_side,
                                         double area_load = 0.5);

struct RingEllipse {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta = 0.0;
};

struct TowerParams {
  RingEllipse bottom;
  RingEllipse middle;
  RingEllipse top;
  double height = 10.0;
  int rings = 21;
  int points_per_ring = 16;

  double reference_radius() const { return height / 5.0; }
  /// Throws InvalidArgument on out-of-range alphas/betas or an even ring count.
  void validate() const;
};

inline constexpr double kAlphaMin = 0.5;
inline constexpr double kAlphaMax = 1.5;
inline constexpr double kBetaMax = 0.26179938779914941;  // pi / 12

/// Random alphas in [1/2, 3/2) and betas in [-pi/12, pi/12) for the three
/// parametrizing rings; sizes are copied from `shape`.
TowerParams sample_tower_params(std::uint64_t seed, const TowerParams& shape);

struct TowerInstance {
  ShapeTarget target;
  BoundaryConditions bc;
  Vector signs;
  Points rings;  // bottom, middle and top ring points, 3k x 3
};

/// k points at uniform angles on an ellipse with radii alpha1 r, alpha2 r,
/// rotated in plane by beta, at height z.
Points ellipse_ring(const RingEllipse& ellipse, double radius, int points, double z);

/// Ring i sits at z = i h / (D - 1); the middle ring is ring (D - 1) / 2.
TowerInstance tower_target_from_params(const TowerParams& params);
TowerInstance sample_tower_target(std::uint64_t seed, const TowerParams& shape);

/// -1 on the middle ring's circumferential bars, +1 elsewhere.
Vector tower_signs(int rings, int points_per_ring);

nlohmann::json to_json(const BezierControlGrid& grid);
BezierControlGrid bezier_from_json(const nlohmann::json& doc, double plan_width);
nlohmann::json to_json(const TowerParams& params);

}  // namespace formfind

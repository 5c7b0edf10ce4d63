#include "formfind/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "formfind/errors.hpp"

namespace formfind {

std::array<double, 4> bernstein3(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
}

Vec3 bezier_point(const BezierControlGrid& grid, double u, double v) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument("Bezier parameters must lie in [0, 1]");
  }
  const auto bu = bernstein3(u);
  const auto bv = bernstein3(v);
  Vec3 p = Vec3::Zero();
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) p += bu[e] * bv[g] * grid.at(e, g);
  }
  return p;
}

namespace {

double reference_coordinate(int index, double w) {
  static constexpr double kFractions[4] = {-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5};
  return kFractions[index] * w;
}

// Index in the positive quadrant ({2, 3}) that `index` mirrors onto.
int positive_index(int index) { return index >= 2 ? index : 3 - index; }

Vec3 uniform_translation(std::mt19937_64& rng, const TranslationBounds& b) {
  Vec3 t;
  for (int d = 0; d < 3; ++d) {
    std::uniform_real_distribution<double> dist(b.lower[d], b.upper[d]);
    t[d] = b.lower[d] == b.upper[d] ? b.lower[d] : dist(rng);
  }
  return t;
}

}  // namespace

BezierControlGrid flat_controls(double plan_width) {
  BezierControlGrid grid;
  grid.plan_width = plan_width;
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) {
      grid.at(e, g) =
          Vec3(reference_coordinate(e, plan_width), reference_coordinate(g, plan_width), 0.0);
    }
  }
  return grid;
}

TranslationBounds control_point_bounds(int e, int g, double w) {
  if (e < 0 || e > 3 || g < 0 || g > 3) {
    throw InvalidArgument("control point index out of range");
  }
  const int qe = positive_index(e);
  const int qg = positive_index(g);
  TranslationBounds b;
  if (qe == 2 && qg == 2) {  // c1
    b.lower = Vec3(0.0, 0.0, w / 10.0);
    b.upper = Vec3(0.0, 0.0, w);
  } else if (qe == 3 && qg == 2) {  // c2
    b.lower = Vec3(-w / 2.0, 0.0, 0.0);
    b.upper = Vec3(w / 2.0, 0.0, w / 2.0);
  } else if (qe == 2 && qg == 3) {  // c3
    b.lower = Vec3(0.0, -w / 2.0, 0.0);
    b.upper = Vec3(0.0, w / 2.0, 0.0);
  } else {  // c4, static
    b.lower = Vec3::Zero();
    b.upper = Vec3::Zero();
    b.movable = false;
  }
  if (e < 2) {
    const double lo = b.lower.x();
    b.lower.x() = -b.upper.x();
    b.upper.x() = -lo;
  }
  if (g < 2) {
    const double lo = b.lower.y();
    b.lower.y() = -b.upper.y();
    b.upper.y() = -lo;
  }
  return b;
}

BezierControlGrid sample_symmetric_controls(std::uint64_t seed, double plan_width) {
  std::mt19937_64 rng(seed);
  BezierControlGrid grid = flat_controls(plan_width);
  // c1, c2, c3 in the positive quadrant; c4 stays put.
  for (const auto [e, g] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 3}}) {
    grid.at(e, g) += uniform_translation(rng, control_point_bounds(e, g, plan_width));
  }
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) {
      const Vec3 q = grid.at(positive_index(e), positive_index(g));
      grid.at(e, g) = Vec3(e >= 2 ? q.x() : -q.x(), g >= 2 ? q.y() : -q.y(), q.z());
    }
  }
  return grid;
}

BezierControlGrid sample_asymmetric_controls(std::uint64_t seed, double plan_width) {
  std::mt19937_64 rng(seed);
  BezierControlGrid grid = flat_controls(plan_width);
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) {
      const auto bounds = control_point_bounds(e, g, plan_width);
      if (bounds.movable) grid.at(e, g) += uniform_translation(rng, bounds);
    }
  }
  return grid;
}

BezierControlGrid interpolate_controls(const BezierControlGrid& sym,
                                       const BezierControlGrid& asym, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidArgument("interpolation factor must lie in [0, 1]");
  }
  if (sym.plan_width != asym.plan_width) {
    throw InvalidArgument("control grids have different plan widths");
  }
  BezierControlGrid out;
  out.plan_width = sym.plan_width;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i] = (1.0 - delta) * sym.points[i] + delta * asym.points[i];
  }
  return out;
}

double mirror_symmetry_error(const BezierControlGrid& grid) {
  double err = 0.0;
  for (int e = 0; e < 4; ++e) {
    for (int g = 0; g < 4; ++g) {
      const Vec3& p = grid.at(e, g);
      const Vec3& mx = grid.at(3 - e, g);  // across the yz plane
      const Vec3& my = grid.at(e, 3 - g);  // across the xz plane
      err = std::max(err, (Vec3(-mx.x(), mx.y(), mx.z()) - p).cwiseAbs().maxCoeff());
      err = std::max(err, (Vec3(my.x(), -my.y(), my.z()) - p).cwiseAbs().maxCoeff());
    }
  }
  return err;
}

ShellInstance shell_target_from_controls(const BezierControlGrid& grid, int grid_side,
                                         double area_load) {
  const Topology topology = build_grid_shell_topology(grid_side);
  const int g = grid_side;
  ShellInstance out;
  out.target.positions.resize(g * g, 3);
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      const double u = static_cast<double>(c) / (g - 1);
      const double v = static_cast<double>(r) / (g - 1);
      out.target.positions.row(r * g + c) = bezier_point(grid, u, v).transpose();
    }
  }
  out.target.mask = Points::Ones(g * g, 3);
  out.bc.anchors.resize(topology.num_fixed(), 3);
  const auto fixed = topology.fixed();
  for (std::size_t s = 0; s < fixed.size(); ++s) {
    out.bc.anchors.row(static_cast<Eigen::Index>(s)) = out.target.positions.row(fixed[s]);
  }
  out.bc.loads = shell_loads(topology, grid.plan_width, area_load);
  return out;
}

void TowerParams::validate() const {
  if (rings < 3 || rings % 2 == 0) {
    throw InvalidArgument("tower targets need an odd ring count of at least 3");
  }
  if (points_per_ring < 3) {
    throw InvalidArgument("tower rings need at least 3 points");
  }
  if (!(height > 0.0)) {
    throw InvalidArgument("tower height must be positive");
  }
  for (const auto* ring : {&bottom, &middle, &top}) {
    for (double a : {ring->alpha1, ring->alpha2}) {
      if (!(a >= kAlphaMin && a < kAlphaMax)) {
        throw InvalidArgument("ring scale factor " + std::to_string(a) +
                              " outside [1/2, 3/2)");
      }
    }
    if (!(ring->beta >= -kBetaMax && ring->beta < kBetaMax)) {
      throw InvalidArgument("ring rotation " + std::to_string(ring->beta) +
                            " outside [-pi/12, pi/12)");
    }
  }
}

TowerParams sample_tower_params(std::uint64_t seed, const TowerParams& shape) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha(kAlphaMin, kAlphaMax);
  std::uniform_real_distribution<double> beta(-kBetaMax, kBetaMax);
  TowerParams params = shape;
  for (auto* ring : {&params.bottom, &params.middle, &params.top}) {
    ring->alpha1 = alpha(rng);
    ring->alpha2 = alpha(rng);
    ring->beta = beta(rng);
  }
  return params;
}

Points ellipse_ring(const RingEllipse& ellipse, double radius, int points, double z) {
  Points ring(points, 3);
  const double cb = std::cos(ellipse.beta);
  const double sb = std::sin(ellipse.beta);
  for (int p = 0; p < points; ++p) {
    const double theta = 2.0 * std::numbers::pi * p / points;
    const double a = ellipse.alpha1 * radius * std::cos(theta);
    const double b = ellipse.alpha2 * radius * std::sin(theta);
    ring(p, 0) = cb * a - sb * b;
    ring(p, 1) = sb * a + cb * b;
    ring(p, 2) = z;
  }
  return ring;
}

Vector tower_signs(int rings, int points_per_ring) {
  const int m = points_per_ring * (2 * rings - 1);
  Vector s = Vector::Ones(m);
  const int middle = (rings - 1) / 2;
  s.segment(middle * points_per_ring, points_per_ring).setConstant(-1.0);
  return s;
}

TowerInstance tower_target_from_params(const TowerParams& params) {
  params.validate();
  const int d = params.rings;
  const int k = params.points_per_ring;
  const int middle = (d - 1) / 2;
  const double r = params.reference_radius();
  const double spacing = params.height / (d - 1);

  const Points bottom = ellipse_ring(params.bottom, r, k, 0.0);
  const Points mid = ellipse_ring(params.middle, r, k, middle * spacing);
  const Points top = ellipse_ring(params.top, r, k, params.height);

  TowerInstance out;
  out.target.positions = Points::Zero(d * k, 3);
  out.target.mask = Points::Ones(d * k, 3);
  for (int ring = 0; ring < d; ++ring) {
    if (ring == 0) {
      out.target.positions.middleRows(0, k) = bottom;
    } else if (ring == d - 1) {
      out.target.positions.middleRows(ring * k, k) = top;
    } else if (ring == middle) {
      out.target.positions.middleRows(ring * k, k) = mid;
    } else {
      // Tension rings only prescribe their height.
      out.target.positions.middleRows(ring * k, k).col(2).setConstant(ring * spacing);
      out.target.mask.middleRows(ring * k, k).leftCols(2).setZero();
    }
  }

  out.bc.anchors.resize(2 * k, 3);
  out.bc.anchors.topRows(k) = bottom;
  out.bc.anchors.bottomRows(k) = top;
  out.bc.loads = Points::Zero(d * k, 3);
  out.signs = tower_signs(d, k);

  out.rings.resize(3 * k, 3);
  out.rings.topRows(k) = bottom;
  out.rings.middleRows(k, k) = mid;
  out.rings.bottomRows(k) = top;
  return out;
}

TowerInstance sample_tower_target(std::uint64_t seed, const TowerParams& shape) {
  return tower_target_from_params(sample_tower_params(seed, shape));
}

nlohmann::json to_json(const BezierControlGrid& grid) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : grid.points) pts.push_back({p.x(), p.y(), p.z()});
  return pts;
}

BezierControlGrid bezier_from_json(const nlohmann::json& doc, double plan_width) {
  if (!doc.is_array() || doc.size() != 16) {
    throw InvalidArgument("control_points must be 16 [x,y,z] rows");
  }
  BezierControlGrid grid;
  grid.plan_width = plan_width;
  for (std::size_t i = 0; i < 16; ++i) {
    const auto& row = doc[i];
    if (!row.is_array() || row.size() != 3) {
      throw InvalidArgument("control_points must be 16 [x,y,z] rows");
    }
    for (int d = 0; d < 3; ++d) {
      if (!row[d].is_number()) throw InvalidArgument("control point coordinates must be numbers");
      grid.points[i][d] = row[d].get<double>();
    }
  }
  return grid;
}

nlohmann::json to_json(const TowerParams& params) {
  auto ring = [](const RingEllipse& e) {
    return nlohmann::json{{"alpha1", e.alpha1}, {"alpha2", e.alpha2}, {"beta", e.beta}};
  };
  return {{"bottom", ring(params.bottom)},
          {"middle", ring(params.middle)},
          {"top", ring(params.top)},
          {"height", params.height},
          {"rings", params.rings},
          {"points_per_ring", params.points_per_ring}};
}

}  // namespace formfind

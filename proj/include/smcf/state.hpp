#pragma once

#include <memory>

#include "smcf/grid.hpp"

namespace smcf {

/// A codimension-two immersed torus sampled on a periodic grid, together with
/// the reference directions that seed the orthonormal normal frame. The
/// references are carried along a flow by projection so the frame stays a
/// continuous gauge; every geometric operator built from it is gauge-free.
struct ImmersionState {
  std::shared_ptr<const PeriodicGrid> grid;
  Field positions;   // num_nodes * ambient
  Field gauge_ref1;  // num_nodes * ambient
  Field gauge_ref2;
  double time = 0.0;

  const double* pos(std::int64_t node) const {
    return positions.data() + node * grid->ambient();
  }
  double* pos(std::int64_t node) { return positions.data() + node * grid->ambient(); }
};

/// Round circle of radius r in the z = 0 plane of R^3 (n = 1).
ImmersionState make_circle(std::shared_ptr<const PeriodicGrid> grid, double r);

/// Planar circle with radial cosine bump: radius r + amp * cos(mode * theta).
ImmersionState make_perturbed_circle(std::shared_ptr<const PeriodicGrid> grid,
                                     double r, int mode, double amp);

/// Product torus S^1(a) x S^1(b) in R^4 (n = 2). The second circle runs
/// clockwise so that the oriented normal rotation pushes radius a outward and
/// radius b inward, matching the sphere-product reduction used as an oracle.
ImmersionState make_clifford_torus(std::shared_ptr<const PeriodicGrid> grid,
                                   double a, double b);

}  // namespace smcf

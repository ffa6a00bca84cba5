#include "smcf/state.hpp"

#include <cmath>

#include "smcf/errors.hpp"

namespace smcf {

namespace {

ImmersionState blank_state(std::shared_ptr<const PeriodicGrid> grid, int want_n) {
  if (!grid) throw ConfigError("builtin initial data requires a grid");
  if (grid->n() != want_n)
    throw ConfigError("builtin initial data has intrinsic dimension " +
                      std::to_string(want_n) + " but the grid is " +
                      std::to_string(grid->n()) + "-dimensional");
  ImmersionState s;
  s.grid = std::move(grid);
  const std::int64_t total = s.grid->num_nodes() * s.grid->ambient();
  s.positions.assign(total, 0.0);
  s.gauge_ref1.assign(total, 0.0);
  s.gauge_ref2.assign(total, 0.0);
  s.time = 0.0;
  return s;
}

}  // namespace

ImmersionState make_circle(std::shared_ptr<const PeriodicGrid> grid, double r) {
  return make_perturbed_circle(std::move(grid), r, 0, 0.0);
}

ImmersionState make_perturbed_circle(std::shared_ptr<const PeriodicGrid> grid,
                                     double r, int mode, double amp) {
  if (!(r > 0.0)) throw ConfigError("circle radius must be positive");
  ImmersionState s = blank_state(std::move(grid), 1);
  const std::int64_t nn = s.grid->num_nodes();
  for (std::int64_t node = 0; node < nn; ++node) {
    const double th = s.grid->coord(0, node);
    const double c = std::cos(th), sn = std::sin(th);
    const double rad = r + amp * std::cos(mode * th);
    double* p = s.pos(node);
    p[0] = rad * c;
    p[1] = rad * sn;
    p[2] = 0.0;
    double* u = s.gauge_ref1.data() + node * 3;
    u[0] = c;
    u[1] = sn;
    u[2] = 0.0;
    double* z = s.gauge_ref2.data() + node * 3;
    z[0] = 0.0;
    z[1] = 0.0;
    z[2] = 1.0;
  }
  return s;
}

ImmersionState make_clifford_torus(std::shared_ptr<const PeriodicGrid> grid,
                                   double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("torus radii must be positive");
  ImmersionState s = blank_state(std::move(grid), 2);
  const std::int64_t nn = s.grid->num_nodes();
  for (std::int64_t node = 0; node < nn; ++node) {
    const double t1 = s.grid->coord(0, node);
    const double t2 = s.grid->coord(1, node);
    const double c1 = std::cos(t1), s1 = std::sin(t1);
    const double c2 = std::cos(t2), s2 = std::sin(t2);
    double* p = s.pos(node);
    p[0] = a * c1;
    p[1] = a * s1;
    p[2] = b * c2;
    p[3] = -b * s2;
    double* u = s.gauge_ref1.data() + node * 4;
    u[0] = c1;
    u[1] = s1;
    u[2] = 0.0;
    u[3] = 0.0;
    double* v = s.gauge_ref2.data() + node * 4;
    v[0] = 0.0;
    v[1] = 0.0;
    v[2] = c2;
    v[3] = -s2;
    }
  return s;
}

}  // namespace smcf

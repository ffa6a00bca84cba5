#pragma once

#include <functional>
#include <string>
#include <vector>

#include "smcf/geometry.hpp"

namespace smcf {

/// Step-control and diagnostics knobs for the evolution loop. The velocity is
/// eps * H + J H: eps = 0 is the purely skew (Hamiltonian) motion, eps > 0
/// adds a parabolic regularization that strictly dissipates area.
struct FlowConfig {
  double epsilon = 0.0;
  double t_end = 1.0;
  double dt = 0.0;    // fixed step when > 0, otherwise parabolic CFL control
  double cfl = 0.2;   // dt = cfl * h_min^2 / max |g^{-1}|
  int k = -1;         // energy derivative order; -1 picks floor(n/2) + 1
  double delta = 0.5; // curvature L^p exponent offset, p = n + delta
  std::int64_t output_every = 1;
  std::int64_t checkpoint_every = 0;  // consumed by the CLI driver, not here
  double energy_ceiling = 0.0;        // absolute bound; 0 means 1e3 * E(0)
  double dt_min = 1e-12;
  double filter_strength = 0.0;       // optional high-mode damping, off by default
  double g_min = 1e-8;
};

enum class RunStatus { completed, degenerate, blowup_suspected };
std::string to_string(RunStatus s);

struct TickRow {
  double t = 0.0;
  EnergyReport energy;
  double H_L2_sq = 0.0;   // integral |H|^2 dmu, drives the area decay identity
  double min_det_g = 0.0;
  double dt = 0.0;        // step size in effect when the row was emitted
};

struct FlowTrace {
  std::vector<TickRow> rows;
  RunStatus status = RunStatus::completed;
  double final_time = 0.0;
  std::string note;
};

/// eps H + J H per node into out (num_nodes * m).
void flow_velocity(const GeometryCache& cache, double epsilon, Field& out);

/// One classical fourth-order Runge-Kutta step. at_state must be the geometry
/// of s; the three remaining stage builds go through scratch. All stages reuse
/// the gauge references of the step start. dt == 0 returns s bit-identical.
void rk4_step(ImmersionState& s, double dt, double epsilon,
              const GeometryCache& at_state, GeometryCache& scratch,
              double g_min = 1e-8);

/// Called at every output tick with the current state and its geometry.
using Observer =
    std::function<void(const ImmersionState&, const GeometryCache&, std::int64_t step)>;

/// Advance s to cfg.t_end, emitting a row at t = 0, every output_every-th
/// step, and at the final time. Breakdown (degenerate metric, non-finite
/// state, energy past the ceiling, step underflow) ends the run with the
/// matching status and a terminal row of the last valid geometry.
FlowTrace run_flow(ImmersionState& s, const FlowConfig& cfg, const Observer& obs = {});

/// Max-norm residuals of the first-variation identities, measured by central
/// time differences of actual flow steps against the analytic right-hand
/// sides: d/dt g = -2 <J_eps H, A>, d/dt dmu = -eps |H|^2 dmu, and the
/// induced evolution of the Christoffel symbols.
struct EvolutionResiduals {
  double metric_max = 0.0;
  double measure_max = 0.0;
  double christoffel_max = 0.0;
};
EvolutionResiduals verify_evolution_equations(const ImmersionState& s, double epsilon,
                                              double dt_probe);

/// Runs the same initial data at several eps values plus the eps = 0
/// reference, all with one fixed step size, and compares positions at matched
/// times in the flat parameter L^2 distance.
struct EpsilonStudy {
  std::vector<double> epsilons;
  std::vector<double> sample_times;
  std::vector<std::vector<double>> dist_to_reference;  // [eps][sample]
  std::vector<std::vector<double>> dist_consecutive;   // [eps-1][sample]
  double fitted_order = 0.0;  // log-log slope of final-time distance vs eps
};
EpsilonStudy epsilon_family_study(const ImmersionState& init,
                                  const std::vector<double>& epsilons,
                                  const FlowConfig& cfg);

/// sqrt(sum |a - b|^2 h1 h2) over nodes: flat parameter-space L^2 distance.
double position_l2_distance(const ImmersionState& a, const ImmersionState& b);

/// Damp the highest Fourier modes of the position field (strength 0 = no-op).
void spectral_filter(ImmersionState& s, double strength);

}  // namespace smcf

#pragma once

#include <string>
#include <vector>

#include "smcf/flow.hpp"
#include "smcf/state.hpp"
#include "smcf/uniqueness.hpp"

namespace smcf {

/// Initial-data block of a run configuration. Exactly one builtin shape is
/// named; the parameters that apply to it must be present and the rest absent.
struct InitialConfig {
  std::string builtin;        // circle | perturbed_circle | clifford_torus | from_snapshot
  double r = 1.0;             // circle, perturbed_circle
  int mode = 2;               // perturbed_circle
  double amp = 0.0;           // perturbed_circle
  double a = 1.0, b = 1.0;    // clifford_torus
  std::string path;           // from_snapshot
  std::vector<int> grid;      // grid sizes; taken from the snapshot when loading
};

struct OutputConfig {
  std::string csv;           // trace CSV path; empty writes no file
  std::string snapshot_dir;  // checkpoint directory; empty writes no snapshots
};

/// Parsed and validated run configuration. `mode` selects the motion law:
/// "smcf" pins epsilon to zero, "perturbed" requires epsilon > 0.
struct RunConfig {
  std::string mode = "smcf";
  FlowConfig flow;
  InitialConfig initial;
  OutputConfig outputs;
};

/// Strict JSON parse: unknown keys are rejected and every validation error
/// names the offending field (e.g. "flow.epsilon"). parse takes the document
/// text; load reads the file first.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Realize the configured initial immersion.
ImmersionState build_initial(const InitialConfig& cfg);

/// Fill the gauge reference fields from positions alone: per node, the two
/// canonical ambient axes least aligned with the tangent plane. Snapshots do
/// not store the gauge (every reported quantity is gauge-free), so loading
/// one reconstructs a valid reference pair deterministically.
void synthesize_gauge(ImmersionState& s);

/// Versioned plain-text snapshot of an immersion. All numbers print with 17
/// significant digits, so read(write(s)) reproduces positions and time
/// bit-exactly.
void write_snapshot(const std::string& path, const ImmersionState& s);
ImmersionState read_snapshot(const std::string& path);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);

/// Run the configured flow. Returns the trace, the final state, and the trace
/// CSV text (columns: t, vol, H_Lp, A_l2_sq_0 ... A_l2_sq_k, E_k, status).
/// Side effects per the outputs block: the CSV file, checkpoint snapshots
/// every checkpoint_every steps, and a final snapshot regardless of how the
/// run ended.
struct SimulateOutcome {
  FlowTrace trace;
  ImmersionState final_state;
  std::string csv;
};
SimulateOutcome run_simulate(const RunConfig& cfg);

/// Run two configurations side by side and evaluate the distance functional
/// at `samples` evenly spaced times (both ends included). Both configs must
/// agree on grid shape, dt (fixed steps required), and t_end. Cut-locus
/// samples print as nan rows and the series continues. CSV columns:
/// t, L1, L2, L3, L_total, fitted_C (value only on the last row).
struct CompareOutcome {
  UniquenessReport report;
  std::string csv;
};
CompareOutcome run_compare(const RunConfig& a, const RunConfig& b, int samples);

/// Refinement table of the evolution-law residuals and the two-route energy
/// gap on the configured initial data, at the configured grid and two
/// coarsenings. CSV columns: N, metric, measure, christoffel, energy_gap;
/// the final row reports the fitted convergence orders.
std::string run_verify_csv(const RunConfig& cfg);

/// Closed-form and reduced-model reference outputs.
///   circle:         t, radius, height          (r, epsilon; samples over [0, t_end])
///   sphere-product: t, a, b, blew_up, blowup_time
///   filament:       theta, s, kappa, phase, psi_re, psi_im
/// Unknown names raise ConfigError listing the available oracles.
struct OracleParams {
  double r = 1.0;
  double epsilon = 0.0;
  double t_end = 1.0;
  int samples = 11;
  int p = 1, q = 1;
  double a = 1.0, b = 1.0;
  double r_min = 1e-6;
  int mode = 2;
  double amp = 0.0;
  int n = 64;
};
std::string oracle_csv(const std::string& name, const OracleParams& prm);

/// One-shot energy report of a stored snapshot. CSV columns:
/// quantity, value — one row per energy component.
std::string energies_csv(const std::string& snapshot_path, int k, double delta);

}  // namespace smcf

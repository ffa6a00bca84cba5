#pragma once

#include <vector>

#include "smcf/geometry.hpp"
#include "smcf/grassmann.hpp"

namespace smcf {

/// The solution-distance functional at a single instant, split into its three
/// measured components. All integrals run against the frozen measure of a
/// background immersion (normally the shared initial data):
///
///   L1 = ||d(rho, rho~)||^2 + ||A - R_2(A~)||^2 + ||grad A - R_3(grad~ A~)||^2
///   L2 = ||g - g~||^2 + ||Gamma - Gamma~||^2      (background-metric norms)
///   L3 = ||I - Q||^2                              (mixed-slot norm, see below)
///
/// Slot contractions in L1 use the evolving metric of the first (target)
/// state; transported values are compared in the ambient Euclidean norm. The
/// L3 norm contracts the source slot of I - Q with the inverse background
/// metric and the target slot with the target's evolving metric; together
/// with the fact that Q intertwines the two induced metrics exactly, this
/// makes every component invariant under swapping the two arguments up to
/// roundoff, while freezing the background keeps the functional comparable
/// across times.
struct LParts {
  double L1 = 0.0;
  double L2 = 0.0;
  double L3 = 0.0;
  double total = 0.0;
};

/// Distance functional between two states sampled on the same grid.
/// `background` supplies the frozen metric and measure (build it once from
/// the shared initial immersion). Identical inputs produce exact zeros: every
/// per-node map degenerates to a bit-exact identity, so each difference field
/// is identically 0.0.
///
/// Errors: ConfigError (grids do not match), MetricsInequivalent (the
/// condition number of g^{-1} g~ reaches cond_max at some node), CutLocus
/// (tangent planes too close to antipodal for a unique transport).
LParts L_functional(const ImmersionState& a, const ImmersionState& b,
                    const GeometryCache& background, double cond_max = 1e3);

/// One sampled instant of a two-run comparison. Rows where the transport hit
/// its cut locus carry cut_locus = true and a zero-filled value; the study
/// keeps going and re-bases its envelope after the gap.
struct LSample {
  double t = 0.0;
  LParts value;
  bool cut_locus = false;
};

/// Time series of the distance functional together with the fitted
/// exponential growth rate and the envelope check it implies:
///   fitted_C     least-squares slope of log(total) over rows with total > 0
///   envelope_max max over windows of total(t) / (e^{C (t - t0)} total(t0)),
///                t0 the first positive row of each cut-locus-free window
///   envelope_ok  envelope_max <= 1 + 1e-2
///   windows      number of contiguous cut-locus-free stretches
struct UniquenessReport {
  std::vector<LSample> rows;
  double fitted_C = 0.0;
  bool fit_valid = false;  // at least two rows with total > 0 entered the fit
  double envelope_max = 0.0;
  bool envelope_ok = true;
  int windows = 0;
};

/// Evaluate the distance functional along two matched runs. run_a, run_b and
/// times must have equal length; states at index i are compared at time
/// times[i]. CutLocus at one sample flags that row and the series continues;
/// every other error propagates.
UniquenessReport gronwall_study(const std::vector<ImmersionState>& run_a,
                                const std::vector<ImmersionState>& run_b,
                                const std::vector<double>& times,
                                const GeometryCache& background);

/// Rough Laplacian of a normal-bundle-valued covariant tensor: the metric
/// trace of two covariant derivatives, slot count unchanged.
TensorField rough_laplacian(const GeometryCache& cache, const TensorField& T);

/// How far transport is from commuting with the two Laplacians, next to the
/// four geometric gaps that control it. Left side per node:
///   |Delta_g(R_s Phi) - R_s(Delta~_g~ Phi)|
/// with Phi a normal-valued tensor over the second state. Right-side
/// ingredients: the Grassmannian distance d, the transported second-form gap
/// |A - R_2(A~)|, and the background-norm gaps |g - g~| and |Gamma - Gamma~|.
/// Each quantity is reported as a pointwise max and as the L^2 norm against
/// the background measure.
struct DiagnosticsReport {
  double lhs_max = 0.0, lhs_l2 = 0.0;
  double dist_max = 0.0, dist_l2 = 0.0;
  double second_form_gap_max = 0.0, second_form_gap_l2 = 0.0;
  double metric_gap_max = 0.0, metric_gap_l2 = 0.0;
  double connection_gap_max = 0.0, connection_gap_l2 = 0.0;
};

/// phi lives over state b (s covariant slots, ambient-vector values) and is
/// carried onto state a by the bundle transport. Preconditions and errors
/// match L_functional.
DiagnosticsReport auxiliary_diagnostics(const ImmersionState& a,
                                        const ImmersionState& b,
                                        const TensorField& phi,
                                        const GeometryCache& background,
                                        double cond_max = 1e3);

}  // namespace smcf

#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "smcf/state.hpp"

namespace smcf {

/// Closed-form circle motion under eps H + J H: the radius obeys
/// a(t) = sqrt(r^2 - 2 eps t) and the axial drift is (r - a) / eps
/// (limit t / r as eps -> 0).
struct CircleLaw {
  double radius = 0.0;
  double height = 0.0;
};
CircleLaw circle_law(double r0, double epsilon, double t);

/// The exact evolved circle as a grid state (z = height, gauge as the builtin
/// circle). Throws ConfigError when r^2 - 2 eps t <= 0 (circle vanished).
ImmersionState circle_exact(std::shared_ptr<const PeriodicGrid> grid, double r0,
                            double epsilon, double t);

/// Reduced skew dynamics of a product of round spheres S^p(a) x S^q(b):
/// (a', b') = (q / b, -p / a). Blow-up is declared when min(a, b) < r_min.
struct SphereProductParams {
  int p = 1, q = 1;
  double a0 = 1.0, b0 = 1.0;
  double r_min = 1e-6;
};
struct SphereProductTrajectory {
  std::vector<double> t, a, b;  // rows at the requested sample times
  bool blew_up = false;
  double blowup_time = 0.0;     // located by bisection when blew_up
};

/// Adaptive embedded 4(5) integration to ~1e-12 until t_end or blow-up.
/// sample_times must be nondecreasing and <= t_end; rows past blow-up are
/// dropped and the trajectory ends with the blow-up point itself.
SphereProductTrajectory sphere_product_ode(const SphereProductParams& prm,
                                           double t_end,
                                           const std::vector<double>& sample_times);

/// The filament function of a closed space curve: psi(theta) = kappa * e^{i phi}
/// with phi the accumulated torsion-times-arclength integral, plus the
/// arclength chart. Frenet data comes from the same fourth-order stencils as
/// the flow. Throws VanishingCurvature when kappa drops below kappa_min.
struct FilamentFunction {
  std::vector<std::complex<double>> psi;  // at the curve's parameter nodes
  std::vector<double> speed;              // |dF/dtheta| per node
  std::vector<double> s_of_theta;         // arclength from theta = 0
  std::vector<double> phase;              // unwrapped phase integral per node
  double length = 0.0;
  double torsion_phase = 0.0;             // total phase over one period
};
FilamentFunction filament_function(const ImmersionState& curve,
                                   double kappa_min = 1e-6);

/// Trigonometric resampling of psi onto n_out uniform-arclength points; the
/// linear-in-theta part of the phase is split off so only periodic fields are
/// interpolated.
std::vector<std::complex<double>> resample_uniform_arclength(const FilamentFunction& f,
                                                             int n_out);

/// Focusing cubic Schrodinger flow i psi_t + psi_ss + lambda |psi|^2 psi = 0 on
/// a circle of circumference L: Strang split-step Fourier. Mass is conserved
/// to roundoff. The cubic coefficient lambda is the calibratable knob of the
/// curve <-> filament correspondence (default 1/2).
std::vector<std::complex<double>> nls_evolve(std::vector<std::complex<double>> psi,
                                             double L, double t_end, double dt,
                                             double lambda = 0.5);

}  // namespace smcf

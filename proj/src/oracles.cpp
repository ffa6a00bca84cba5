#include "smcf/oracles.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "smcf/errors.hpp"

namespace smcf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Trigonometric machinery: modes of a real periodic field sampled on N
// uniform nodes, with pointwise evaluation and the exact cumulative integral
// of the interpolant from theta = 0.
// ---------------------------------------------------------------------------
struct RealModes {
  int n = 0;
  std::vector<std::complex<double>> c;  // c[k] = V_k / N, k = 0 .. N/2

  static RealModes analyze(const std::vector<double>& values) {
    RealModes m;
    m.n = static_cast<int>(values.size());
    const int half = m.n / 2;
    m.c.assign(half + 1, {0.0, 0.0});
    std::vector<double> in(values);
    std::vector<std::complex<double>> out(half + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        m.n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
        FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (int k = 0; k <= half; ++k) m.c[k] = out[k] / static_cast<double>(m.n);
    return m;
  }

  double mean() const { return c[0].real(); }

  double eval(double theta) const {
    const int half = n / 2;
    double res = c[0].real();
    for (int k = 1; k < half; ++k) {
      res += 2.0 * (c[k].real() * std::cos(k * theta) -
                    c[k].imag() * std::sin(k * theta));
    }
    res += c[half].real() * std::cos(half * theta);
    return res;
  }

  // Integral of the interpolant over [0, theta].
  double cumulative(double theta) const {
    const int half = n / 2;
    double res = c[0].real() * theta;
    for (int k = 1; k < half; ++k) {
      const double ck = std::cos(k * theta), sk = std::sin(k * theta);
      res += 2.0 * (c[k].real() * sk - c[k].imag() * (1.0 - ck)) / k;
    }
    res += c[half].real() * std::sin(half * theta) / half;
    return res;
  }

  double period_integral() const { return c[0].real() * 2.0 * kPi; }
};

void cross3(const double* a, const double* b, double* out) {
  out[0] = a[1] * b[2] - a[2] * b[1];
  out[1] = a[2] * b[0] - a[0] * b[2];
  out[2] = a[0] * b[1] - a[1] * b[0];
}

}  // namespace

// ---------------------------------------------------------------------------
// Circle under eps H + J H
// ---------------------------------------------------------------------------

CircleLaw circle_law(double r0, double epsilon, double t) {
  if (r0 <= 0.0) throw ConfigError("circle_law: radius must be positive");
  CircleLaw law;
  if (epsilon == 0.0) {
    law.radius = r0;
    law.height = t / r0;
    return law;
  }
  const double rsq = r0 * r0 - 2.0 * epsilon * t;
  if (rsq <= 0.0)
    throw ConfigError("circle_law: circle has vanished before the given time");
  law.radius = std::sqrt(rsq);
  law.height = (r0 - law.radius) / epsilon;
  return law;
}

ImmersionState circle_exact(std::shared_ptr<const PeriodicGrid> grid, double r0,
                            double epsilon, double t) {
  const CircleLaw law = circle_law(r0, epsilon, t);
  ImmersionState s = make_circle(std::move(grid), law.radius);
  const std::int64_t nodes = s.grid->num_nodes();
  for (std::int64_t v = 0; v < nodes; ++v) s.pos(v)[2] = law.height;
  s.time = t;
  return s;
}

// ---------------------------------------------------------------------------
// Reduced sphere-product dynamics (a', b') = (q / b, -p / a)
// ---------------------------------------------------------------------------

namespace {

struct Vec2 {
  double a, b;
};

Vec2 sphere_rhs(const SphereProductParams& prm, Vec2 y) {
  return {static_cast<double>(prm.q) / y.b, -static_cast<double>(prm.p) / y.a};
}

// One embedded Fehlberg 4(5) trial step; returns the fifth-order result and
// the embedded error estimate.
Vec2 rkf45_trial(const SphereProductParams& prm, Vec2 y, double h, double* err) {
  const Vec2 k1 = sphere_rhs(prm, y);
  const Vec2 k2 = sphere_rhs(prm, {y.a + h * 0.25 * k1.a, y.b + h * 0.25 * k1.b});
  const Vec2 k3 = sphere_rhs(prm, {y.a + h * (3.0 / 32 * k1.a + 9.0 / 32 * k2.a),
                                   y.b + h * (3.0 / 32 * k1.b + 9.0 / 32 * k2.b)});
  const Vec2 k4 = sphere_rhs(
      prm, {y.a + h * (1932.0 / 2197 * k1.a - 7200.0 / 2197 * k2.a +
                       7296.0 / 2197 * k3.a),
            y.b + h * (1932.0 / 2197 * k1.b - 7200.0 / 2197 * k2.b +
                       7296.0 / 2197 * k3.b)});
  const Vec2 k5 = sphere_rhs(
      prm, {y.a + h * (439.0 / 216 * k1.a - 8.0 * k2.a + 3680.0 / 513 * k3.a -
                       845.0 / 4104 * k4.a),
            y.b + h * (439.0 / 216 * k1.b - 8.0 * k2.b + 3680.0 / 513 * k3.b -
                       845.0 / 4104 * k4.b)});
  const Vec2 k6 = sphere_rhs(
      prm,
      {y.a + h * (-8.0 / 27 * k1.a + 2.0 * k2.a - 3544.0 / 2565 * k3.a +
                  1859.0 / 4104 * k4.a - 11.0 / 40 * k5.a),
       y.b + h * (-8.0 / 27 * k1.b + 2.0 * k2.b - 3544.0 / 2565 * k3.b +
                  1859.0 / 4104 * k4.b - 11.0 / 40 * k5.b)});
  const Vec2 y5 = {y.a + h * (16.0 / 135 * k1.a + 6656.0 / 12825 * k3.a +
                              28561.0 / 56430 * k4.a - 9.0 / 50 * k5.a +
                              2.0 / 55 * k6.a),
                   y.b + h * (16.0 / 135 * k1.b + 6656.0 / 12825 * k3.b +
                              28561.0 / 56430 * k4.b - 9.0 / 50 * k5.b +
                              2.0 / 55 * k6.b)};
  const Vec2 y4 = {y.a + h * (25.0 / 216 * k1.a + 1408.0 / 2565 * k3.a +
                              2197.0 / 4104 * k4.a - 1.0 / 5 * k5.a),
                   y.b + h * (25.0 / 216 * k1.b + 1408.0 / 2565 * k3.b +
                              2197.0 / 4104 * k4.b - 1.0 / 5 * k5.b)};
  *err = std::max(std::abs(y5.a - y4.a), std::abs(y5.b - y4.b));
  return y5;
}

}  // namespace

SphereProductTrajectory sphere_product_ode(const SphereProductParams& prm,
                                           double t_end,
                                           const std::vector<double>& sample_times) {
  if (prm.p < 1 || prm.q < 1)
    throw ConfigError("sphere_product_ode: sphere dimensions must be >= 1");
  if (prm.a0 <= 0.0 || prm.b0 <= 0.0)
    throw ConfigError("sphere_product_ode: initial radii must be positive");
  if (prm.r_min <= 0.0)
    throw ConfigError("sphere_product_ode: r_min must be positive");
  if (t_end < 0.0) throw ConfigError("sphere_product_ode: t_end must be >= 0");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 0.0 || sample_times[i] > t_end)
      throw ConfigError("sphere_product_ode: sample times must lie in [0, t_end]");
    if (i > 0 && sample_times[i] < sample_times[i - 1])
      throw ConfigError("sphere_product_ode: sample times must be nondecreasing");
  }
  if (std::min(prm.a0, prm.b0) < prm.r_min)
    throw ConfigError("sphere_product_ode: initial radii already below r_min");

  SphereProductTrajectory traj;
  Vec2 y{prm.a0, prm.b0};
  double t = 0.0, h = 1e-3;
  const double atol = 1e-13, rtol = 1e-12;
  std::size_t si = 0;

  auto push_row = [&](double tt, Vec2 yy) {
    traj.t.push_back(tt);
    traj.a.push_back(yy.a);
    traj.b.push_back(yy.b);
  };

  // Targets are the sample times followed by t_end itself.
  auto next_target = [&]() -> double {
    return si < sample_times.size() ? sample_times[si] : t_end;
  };

  while (true) {
    const double target = next_target();
    while (t < target) {
      const double remaining = target - t;
      const double h_try = std::min(h, remaining);
      double err = 0.0;
      const Vec2 y_new = rkf45_trial(prm, y, h_try, &err);
      const double scale =
          atol + rtol * std::max({std::abs(y.a), std::abs(y.b),
                                  std::abs(y_new.a), std::abs(y_new.b)});
      if (err <= scale) {
        if (std::min(y_new.a, y_new.b) < prm.r_min) {
          // Locate the crossing by bisection on the trial-step size.
          double lo = 0.0, hi = h_try;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, t);
               ++it) {
            const double mid = 0.5 * (lo + hi);
            double dummy = 0.0;
            const Vec2 ym = rkf45_trial(prm, y, mid, &dummy);
            (std::min(ym.a, ym.b) < prm.r_min ? hi : lo) = mid;
          }
          const double lambda = 0.5 * (lo + hi);
          double dummy = 0.0;
          const Vec2 yb = rkf45_trial(prm, y, lambda, &dummy);
          traj.blew_up = true;
          traj.blowup_time = t + lambda;
          push_row(traj.blowup_time, yb);
          return traj;
        }
        y = y_new;
        t = (h_try == remaining) ? target : t + h_try;
      }
      const double grow =
          err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 4.0;
      h = h_try * std::clamp(grow, 0.2, 4.0);
      if (h < 1e-14)
        throw Error("sphere_product_ode: step size underflow near a singularity");
    }
    if (si < sample_times.size()) {
      push_row(sample_times[si], y);
      ++si;
    } else {
      break;  // reached t_end
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Filament function of a closed space curve
// ---------------------------------------------------------------------------

FilamentFunction filament_function(const ImmersionState& curve, double kappa_min) {
  const PeriodicGrid& grid = *curve.grid;
  if (grid.n() != 1)
    throw ConfigError("filament_function: a one-axis grid is required");
  const std::int64_t nodes = grid.num_nodes();
  if (curve.positions.size() != static_cast<std::size_t>(nodes) * 3)
    throw ConfigError("filament_function: curve must live in three dimensions");
  if (!all_finite(curve.positions))
    throw NonFiniteState("filament_function input positions");

  // Fourth-order derivatives of the position.
  Field d1s, d2s, d3s;
  deriv1(grid, curve.positions, 3, 0, d1s);
  deriv2(grid, curve.positions, 3, 0, d2s);
  deriv1(grid, d2s, 3, 0, d3s);

  FilamentFunction out;
  out.speed.resize(nodes);
  std::vector<double> kappa(nodes), tau_speed(nodes);
  for (std::int64_t v = 0; v < nodes; ++v) {
    const double* f1 = &d1s[3 * v];
    const double* f2 = &d2s[3 * v];
    const double* f3 = &d3s[3 * v];
    const double sp = std::sqrt(f1[0] * f1[0] + f1[1] * f1[1] + f1[2] * f1[2]);
    if (sp <= 0.0 || !std::isfinite(sp))
      throw DegenerateImmersion(static_cast<int>(v), sp * sp);
    double cr[3];
    cross3(f1, f2, cr);
    const double cr_sq = cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2];
    const double kap = std::sqrt(cr_sq) / (sp * sp * sp);
    if (kap < kappa_min) throw VanishingCurvature(static_cast<int>(v), kap);
    const double tau =
        (cr[0] * f3[0] + cr[1] * f3[1] + cr[2] * f3[2]) / cr_sq;
    out.speed[v] = sp;
    kappa[v] = kap;
    tau_speed[v] = tau * sp;  // d phase / d theta
  }

  const RealModes speed_modes = RealModes::analyze(out.speed);
  const RealModes phase_modes = RealModes::analyze(tau_speed);
  out.length = speed_modes.period_integral();
  out.torsion_phase = phase_modes.period_integral();

  out.s_of_theta.resize(nodes);
  out.phase.resize(nodes);
  out.psi.resize(nodes);
  const double h = 2.0 * kPi / static_cast<double>(nodes);
  for (std::int64_t v = 0; v < nodes; ++v) {
    const double theta = h * static_cast<double>(v);
    out.s_of_theta[v] = speed_modes.cumulative(theta);
    out.phase[v] = phase_modes.cumulative(theta);
    out.psi[v] = std::polar(kappa[v], out.phase[v]);
  }
  return out;
}

std::vector<std::complex<double>> resample_uniform_arclength(
    const FilamentFunction& f, int n_out) {
  const int n = static_cast<int>(f.speed.size());
  if (n < 16) throw ConfigError("resample_uniform_arclength: curve too small");
  if (n_out < 16 || n_out % 2 != 0)
    throw ConfigError(
        "resample_uniform_arclength: output size must be even and >= 16");

  const double h = 2.0 * kPi / static_cast<double>(n);
  const double alpha = f.torsion_phase / (2.0 * kPi);

  std::vector<double> kappa(n), phase_per(n);
  for (int v = 0; v < n; ++v) {
    kappa[v] = std::abs(f.psi[v]);
    phase_per[v] = f.phase[v] - alpha * (h * v);
  }
  const RealModes speed_modes = RealModes::analyze(f.speed);
  const RealModes kappa_modes = RealModes::analyze(kappa);
  const RealModes phase_modes = RealModes::analyze(phase_per);

  std::vector<std::complex<double>> out(n_out);
  const double mean_speed = speed_modes.mean();
  for (int j = 0; j < n_out; ++j) {
    const double s_target =
        f.length * static_cast<double>(j) / static_cast<double>(n_out);
    // Newton inversion of the strictly increasing arclength chart.
    double theta = s_target / mean_speed;
    for (int it = 0; it < 60; ++it) {
      const double resid = speed_modes.cumulative(theta) - s_target;
      const double step = resid / speed_modes.eval(theta);
      theta -= step;
      if (std::abs(step) < 1e-14) break;
    }
    const double kap = kappa_modes.eval(theta);
    const double phi = alpha * theta + phase_modes.eval(theta);
    out[j] = std::polar(kap, phi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cubic Schrodinger reference flow (split-step Fourier)
// ---------------------------------------------------------------------------

std::vector<std::complex<double>> nls_evolve(std::vector<std::complex<double>> psi,
                                             double L, double t_end, double dt,
                                             double lambda) {
  const int n = static_cast<int>(psi.size());
  if (n < 4) throw ConfigError("nls_evolve: need at least four samples");
  if (L <= 0.0) throw ConfigError("nls_evolve: circumference must be positive");
  if (t_end < 0.0) throw ConfigError("nls_evolve: t_end must be >= 0");
  if (dt <= 0.0) throw ConfigError("nls_evolve: dt must be positive");
  if (t_end == 0.0) return psi;

  const int steps =
      std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-12)));
  const double dt_a = t_end / static_cast<double>(steps);

  // Per-mode linear factor e^{-i k^2 dt}, with the inverse-transform
  // normalization folded in.
  std::vector<std::complex<double>> lin(n);
  for (int j = 0; j < n; ++j) {
    const int m = (j <= n / 2) ? j : j - n;
    const double k = 2.0 * kPi * static_cast<double>(m) / L;
    lin[j] = std::polar(1.0 / static_cast<double>(n), -k * k * dt_a);
  }

  fftw_complex* buf = reinterpret_cast<fftw_complex*>(psi.data());
  fftw_plan fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  auto nonlinear_half = [&]() {
    for (int j = 0; j < n; ++j) {
      const double amp_sq = std::norm(psi[j]);
      psi[j] *= std::polar(1.0, lambda * amp_sq * 0.5 * dt_a);
    }
  };

  for (int s = 0; s < steps; ++s) {
    nonlinear_half();
    fftw_execute(fwd);
    for (int j = 0; j < n; ++j) psi[j] *= lin[j];
    fftw_execute(bwd);
    nonlinear_half();
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return psi;
}

}  // namespace smcf

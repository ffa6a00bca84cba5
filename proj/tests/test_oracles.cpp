#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "smcf/errors.hpp"
#include "smcf/flow.hpp"
#include "smcf/oracles.hpp"
#include "smcf/state.hpp"

using namespace smcf;

namespace {

std::shared_ptr<const PeriodicGrid> grid1(int N) {
  return std::make_shared<PeriodicGrid>(std::vector<int>{N});
}

double sym1(double h) { return (8.0 * std::sin(h) - std::sin(2.0 * h)) / (6.0 * h); }
double sym2(double h) {
  return (30.0 - 32.0 * std::cos(h) + 2.0 * std::cos(2.0 * h)) / (12.0 * h * h);
}

constexpr double kTau = 6.283185307179586476925;

}  // namespace

TEST_CASE("circle law reproduces the closed-form shrink and drift") {
  SUBCASE("pure skew motion is a rigid drift at speed 1/r") {
    const CircleLaw law = circle_law(2.0, 0.0, 0.6);
    CHECK(law.radius == 2.0);
    CHECK(law.height == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("dissipative radius obeys the square-root law") {
    const double r0 = 1.5, eps = 0.2, t = 0.7;
    const CircleLaw law = circle_law(r0, eps, t);
    CHECK(law.radius * law.radius + 2.0 * eps * t ==
          doctest::Approx(r0 * r0).epsilon(1e-14));
    CHECK(law.height == doctest::Approx((r0 - law.radius) / eps).epsilon(1e-14));
  }
  SUBCASE("the small-dissipation limit matches the skew drift") {
    const CircleLaw law = circle_law(1.0, 1e-9, 0.5);
    CHECK(law.height == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("a vanished circle is a domain error") {
    CHECK_THROWS_AS(circle_law(1.0, 0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(circle_law(1.0, 0.5, 2.0), ConfigError);
    CHECK_THROWS_AS(circle_law(-1.0, 0.0, 0.1), ConfigError);
  }
  SUBCASE("the grid form places the builtin circle at the drifted height") {
    auto g = grid1(32);
    const ImmersionState ref = make_circle(g, std::sqrt(1.0 - 2.0 * 0.1 * 0.3));
    const ImmersionState s = circle_exact(g, 1.0, 0.1, 0.3);
    const CircleLaw law = circle_law(1.0, 0.1, 0.3);
    for (std::int64_t v = 0; v < g->num_nodes(); ++v) {
      CHECK(s.pos(v)[0] == ref.pos(v)[0]);
      CHECK(s.pos(v)[1] == ref.pos(v)[1]);
      CHECK(s.pos(v)[2] == law.height);
    }
    CHECK(s.time == 0.3);
  }
}

TEST_CASE("sphere-product dynamics match closed-form solutions") {
  SUBCASE("equal unit radii give exact exponentials") {
    SphereProductParams prm;  // p = q = 1, a0 = b0 = 1
    const std::vector<double> samples = {0.25, 1.0, 2.0};
    const SphereProductTrajectory tr = sphere_product_ode(prm, 2.0, samples);
    REQUIRE(tr.t.size() == 3);
    CHECK(!tr.blew_up);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(tr.t[i] == samples[i]);
      CHECK(tr.a[i] == doctest::Approx(std::exp(samples[i])).epsilon(1e-10));
      CHECK(tr.b[i] == doctest::Approx(std::exp(-samples[i])).epsilon(1e-10));
    }
  }
  SUBCASE("the product of radii evolves linearly with slope q - p") {
    SphereProductParams prm;
    prm.p = 1;
    prm.q = 3;
    prm.a0 = 1.1;
    prm.b0 = 0.9;
    const SphereProductTrajectory tr =
        sphere_product_ode(prm, 0.8, {0.2, 0.5, 0.8});
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      CHECK(tr.a[i] * tr.b[i] ==
            doctest::Approx(prm.a0 * prm.b0 + 2.0 * tr.t[i]).epsilon(1e-11));
    }
  }
  SUBCASE("swapping radii and dimensions reverses time") {
    SphereProductParams fwd;
    fwd.p = 2;
    fwd.q = 1;
    fwd.a0 = 1.2;
    fwd.b0 = 0.8;
    const double T = 0.25;
    const SphereProductTrajectory f = sphere_product_ode(fwd, T, {T});
    REQUIRE(f.t.size() == 1);
    SphereProductParams back;
    back.p = 1;
    back.q = 2;
    back.a0 = f.b[0];
    back.b0 = f.a[0];
    const SphereProductTrajectory r = sphere_product_ode(back, T, {T});
    REQUIRE(r.t.size() == 1);
    CHECK(r.a[0] == doctest::Approx(fwd.b0).epsilon(1e-9));
    CHECK(r.b[0] == doctest::Approx(fwd.a0).epsilon(1e-9));
  }
  SUBCASE("a collapsing factor is located exactly") {
    // For (p, q) = (2, 1) from unit radii the solution is a = 1/(1-t),
    // b = (1-t)^2, so b reaches 0.04 at t = 0.8 exactly.
    SphereProductParams prm;
    prm.p = 2;
    prm.q = 1;
    prm.r_min = 0.04;
    const SphereProductTrajectory tr = sphere_product_ode(prm, 2.0, {0.5});
    REQUIRE(tr.t.size() == 2);  // the sample row plus the terminal point
    CHECK(tr.a[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(tr.b[0] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(tr.blew_up);
    CHECK(tr.blowup_time == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(tr.b.back() == doctest::Approx(0.04).epsilon(1e-7));
  }
  SUBCASE("the exponential fixture collapses at log 5 under a 0.2 floor") {
    SphereProductParams prm;
    prm.r_min = 0.2;
    const SphereProductTrajectory tr = sphere_product_ode(prm, 3.0, {});
    CHECK(tr.blew_up);
    CHECK(tr.blowup_time == doctest::Approx(std::log(5.0)).epsilon(1e-9));
  }
  SUBCASE("bad inputs are rejected with field names") {
    SphereProductParams prm;
    CHECK_THROWS_AS(sphere_product_ode(prm, -1.0, {}), ConfigError);
    CHECK_THROWS_AS(sphere_product_ode(prm, 1.0, {0.5, 0.2}), ConfigError);
    CHECK_THROWS_AS(sphere_product_ode(prm, 1.0, {1.5}), ConfigError);
    prm.a0 = -1.0;
    CHECK_THROWS_AS(sphere_product_ode(prm, 1.0, {}), ConfigError);
    prm.a0 = 1.0;
    prm.p = 0;
    CHECK_THROWS_AS(sphere_product_ode(prm, 1.0, {}), ConfigError);
  }
}

TEST_CASE("the filament function of a round circle is a real constant") {
  const double r = 2.0;
  auto g = grid1(128);
  const double h = g->h(0);
  const ImmersionState s = make_circle(g, r);
  const FilamentFunction f = filament_function(s);
  const double mag = sym2(h) / (sym1(h) * sym1(h)) / r;  // discrete curvature
  for (std::int64_t v = 0; v < g->num_nodes(); ++v) {
    CHECK(f.psi[v].real() == doctest::Approx(mag).epsilon(1e-13));
    CHECK(f.psi[v].imag() == 0.0);  // planar data has exactly zero torsion
    CHECK(f.phase[v] == 0.0);
    CHECK(f.s_of_theta[v] ==
          doctest::Approx(r * sym1(h) * h * v).epsilon(1e-12));
  }
  CHECK(f.torsion_phase == 0.0);
  CHECK(f.length == doctest::Approx(kTau * r * sym1(h)).epsilon(1e-13));
}

TEST_CASE("filament curvature converges at fourth order on a perturbed circle") {
  auto curvature_err = [](int N) {
    auto g = grid1(N);
    const ImmersionState s = make_perturbed_circle(g, 1.0, 3, 0.08);
    const FilamentFunction f = filament_function(s);
    double worst = 0.0;
    for (std::int64_t v = 0; v < g->num_nodes(); ++v) {
      const double th = g->h(0) * static_cast<double>(v);
      const double c = std::cos(3.0 * th);
      const double rr = 1.0 + 0.08 * c;
      const double rp = -0.24 * std::sin(3.0 * th);
      const double rpp = -0.72 * c;
      const double kap = (rr * rr + 2.0 * rp * rp - rr * rpp) /
                         std::pow(rr * rr + rp * rp, 1.5);
      worst = std::max(worst, std::abs(std::abs(f.psi[v]) - std::abs(kap)));
    }
    return worst;
  };
  const double e64 = curvature_err(64), e128 = curvature_err(128);
  CHECK(e128 < 2e-5);
  CHECK(std::log2(e64 / e128) > 3.6);
}

TEST_CASE("filament torsion phase is odd under a mirror and self-consistent") {
  auto build = [](int N, double sign) {
    auto g = grid1(N);
    ImmersionState s = make_circle(g, 1.0);
    for (std::int64_t v = 0; v < g->num_nodes(); ++v) {
      const double th = g->h(0) * static_cast<double>(v);
      s.pos(v)[0] = (1.0 + 0.1 * std::cos(2.0 * th)) * std::cos(th);
      s.pos(v)[1] = (1.0 + 0.1 * std::cos(2.0 * th)) * std::sin(th);
      s.pos(v)[2] = sign * 0.2 * std::sin(2.0 * th);
    }
    return s;
  };
  const FilamentFunction f = filament_function(build(256, 1.0));
  const FilamentFunction m = filament_function(build(256, -1.0));
  CHECK(f.torsion_phase == doctest::Approx(-m.torsion_phase).epsilon(1e-12));
  // Fourth-order refinement of the total phase toward a fine-grid reference.
  const double fine = filament_function(build(1024, 1.0)).torsion_phase;
  const double e128 =
      std::abs(filament_function(build(128, 1.0)).torsion_phase - fine);
  const double e256 = std::abs(f.torsion_phase - fine);
  CHECK(e256 < 1e-6);
  CHECK(std::log2(e128 / e256) > 3.5);
  CHECK(std::abs(f.torsion_phase) > 1e-3);  // the fixture is genuinely twisted
}

TEST_CASE("vanishing curvature is reported as a typed error") {
  auto g = grid1(64);
  const ImmersionState s = make_perturbed_circle(g, 1.0, 2, 0.1);
  CHECK_THROWS_AS(filament_function(s, 10.0), VanishingCurvature);
  try {
    filament_function(s, 10.0);
  } catch (const VanishingCurvature& e) {
    CHECK(e.kappa < 10.0);
    CHECK(e.kappa > 0.0);
  }
}

TEST_CASE("uniform-arclength resampling flattens a reparametrized circle") {
  // The same round circle traversed at nonuniform speed: after resampling by
  // arclength the filament function must be the constant 1/r again.
  const int N = 256;
  auto g = grid1(N);
  ImmersionState s = make_circle(g, 2.0);
  for (std::int64_t v = 0; v < g->num_nodes(); ++v) {
    const double th = g->h(0) * static_cast<double>(v);
    const double w = th + 0.3 * std::sin(th);
    s.pos(v)[0] = 2.0 * std::cos(w);
    s.pos(v)[1] = 2.0 * std::sin(w);
    s.pos(v)[2] = 0.0;
  }
  const FilamentFunction f = filament_function(s);
  CHECK(f.length == doctest::Approx(2.0 * kTau).epsilon(1e-6));
  for (std::int64_t v = 1; v < g->num_nodes(); ++v)
    CHECK(f.s_of_theta[v] > f.s_of_theta[v - 1]);
  const std::vector<std::complex<double>> psi = resample_uniform_arclength(f, 64);
  for (const std::complex<double>& p : psi) {
    CHECK(std::abs(p.real() - 0.5) < 1e-5);
    CHECK(p.imag() == 0.0);
  }
  CHECK_THROWS_AS(resample_uniform_arclength(f, 15), ConfigError);
}

TEST_CASE("the cubic Schrodinger reference flow is exact on plane waves") {
  const int N = 64;
  const double L = 7.3, A = 0.8, lambda = 0.5, t = 0.37;
  const double k = kTau * 3.0 / L;
  std::vector<std::complex<double>> psi(N);
  for (int j = 0; j < N; ++j)
    psi[j] = std::polar(A, k * (L * j / static_cast<double>(N)));
  const std::vector<std::complex<double>> out =
      nls_evolve(psi, L, t, 1e-3, lambda);
  // i psi_t + psi_ss + lambda |psi|^2 psi = 0 rotates a plane wave by
  // (lambda A^2 - k^2) t.
  const double rot = (lambda * A * A - k * k) * t;
  for (int j = 0; j < N; ++j) {
    const std::complex<double> expect = psi[j] * std::polar(1.0, rot);
    CHECK(std::abs(out[j] - expect) < 1e-10);
  }
}

TEST_CASE("the Schrodinger flow conserves mass to roundoff") {
  const int N = 128;
  const double L = 5.0;
  std::vector<std::complex<double>> psi(N);
  for (int j = 0; j < N; ++j) {
    const double x = kTau * j / static_cast<double>(N);
    psi[j] = std::polar(0.4 + 0.25 * std::cos(x), std::sin(2.0 * x));
  }
  auto mass = [&](const std::vector<std::complex<double>>& f) {
    double m = 0.0;
    for (const std::complex<double>& v : f) m += std::norm(v);
    return m * L / static_cast<double>(N);
  };
  const double m0 = mass(psi);
  const std::vector<std::complex<double>> out = nls_evolve(psi, L, 0.5, 2e-3, 0.5);
  CHECK(std::abs(mass(out) - m0) < 1e-12 * m0);
}

TEST_CASE("the split-step integrator is second order in time") {
  const int N = 64;
  const double L = 6.0, t = 0.1;
  std::vector<std::complex<double>> psi0(N);
  for (int j = 0; j < N; ++j) {
    const double x = kTau * j / static_cast<double>(N);
    psi0[j] = std::complex<double>(0.8 + 0.3 * std::cos(x), 0.2 * std::sin(x));
  }
  const std::vector<std::complex<double>> ref = nls_evolve(psi0, L, t, 1e-5, 0.5);
  auto err = [&](double dt) {
    const std::vector<std::complex<double>> out = nls_evolve(psi0, L, t, dt, 0.5);
    double e = 0.0;
    for (int j = 0; j < N; ++j) e = std::max(e, std::abs(out[j] - ref[j]));
    return e;
  };
  const double e1 = err(4e-3), e2 = err(2e-3);
  CHECK(std::log2(e1 / e2) > 1.8);
  CHECK(std::log2(e1 / e2) < 2.3);
}

TEST_CASE("skew curve motion tracks the Schrodinger evolution of its filament") {
  // Evolve a perturbed circle under the pure skew flow, then compare the
  // curvature profile in the arclength chart against the filament function
  // evolved by the cubic Schrodinger reference with coefficient 1/2.
  const int N = 128, n_out = 128;
  const double t_end = 0.1;
  auto g = grid1(N);
  ImmersionState s = make_perturbed_circle(g, 1.0, 2, 0.1);
  const FilamentFunction f0 = filament_function(s);
  const std::vector<std::complex<double>> psi0 =
      resample_uniform_arclength(f0, n_out);

  FlowConfig cfg;
  cfg.epsilon = 0.0;
  cfg.t_end = t_end;
  cfg.cfl = 0.2;
  cfg.output_every = 1 << 30;
  const FlowTrace tr = run_flow(s, cfg);
  REQUIRE(tr.status == RunStatus::completed);

  const FilamentFunction ft = filament_function(s);
  const std::vector<std::complex<double>> psi_curve =
      resample_uniform_arclength(ft, n_out);
  const std::vector<std::complex<double>> psi_nls =
      nls_evolve(psi0, f0.length, t_end, 1e-4, 0.5);

  double num = 0.0, den = 0.0;
  for (int j = 0; j < n_out; ++j) {
    const double d = std::abs(psi_curve[j]) - std::abs(psi_nls[j]);
    num += d * d;
    den += std::norm(psi_curve[j]);
  }
  CHECK(std::sqrt(num / den) < 1e-3);
}

#include "smcf/flow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>

#include "smcf/errors.hpp"
#include "smcf/parallel.hpp"

namespace smcf {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::degenerate: return "degenerate";
    case RunStatus::blowup_suspected: return "blowup_suspected";
  }
  return "unknown";
}

void flow_velocity(const GeometryCache& cache, double epsilon, Field& out) {
  const std::int64_t nn = cache.grid->num_nodes();
  const int m = cache.m;
  out.resize(nn * m);
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    double JH[4];
    for (std::int64_t node = b; node < e; ++node) {
      const double* H = cache.H.data() + node * m;
      cache.apply_J(node, H, JH);
      double* v = out.data() + node * m;
      for (int c = 0; c < m; ++c) v[c] = epsilon * H[c] + JH[c];
    }
  });
}

void rk4_step(ImmersionState& s, double dt, double epsilon,
              const GeometryCache& at_state, GeometryCache& scratch, double g_min) {
  if (dt == 0.0) return;
  const std::int64_t total = static_cast<std::int64_t>(s.positions.size());

  Field k1, k2, k3, k4;
  flow_velocity(at_state, epsilon, k1);

  ImmersionState stage = s;  // carries the step-start gauge into every stage
  auto set_stage = [&](const Field& k, double c) {
    parallel_for(total, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i)
        stage.positions[i] = s.positions[i] + c * dt * k[i];
    });
  };

  set_stage(k1, 0.5);
  build_geometry(stage, scratch, g_min);
  flow_velocity(scratch, epsilon, k2);

  set_stage(k2, 0.5);
  build_geometry(stage, scratch, g_min);
  flow_velocity(scratch, epsilon, k3);

  set_stage(k3, 1.0);
  build_geometry(stage, scratch, g_min);
  flow_velocity(scratch, epsilon, k4);

  parallel_for(total, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      s.positions[i] +=
          dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  });
  s.time += dt;
}

namespace {

double h_l2_sq(const GeometryCache& cache) {
  const std::int64_t nn = cache.grid->num_nodes();
  const int m = cache.m;
  return reduce_sum(nn, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t node = b; node < e; ++node) {
      const double* H = cache.H.data() + node * m;
      double h2 = 0.0;
      for (int c = 0; c < m; ++c) h2 += H[c] * H[c];
      acc += h2 * cache.dmu[node];
    }
    return acc;
  });
}

}  // namespace

FlowTrace run_flow(ImmersionState& s, const FlowConfig& cfg, const Observer& obs) {
  if (cfg.t_end < 0.0) throw ConfigError("t_end must be nonnegative");
  if (cfg.dt == 0.0 && !(cfg.cfl > 0.0))
    throw ConfigError("either a fixed dt or a positive cfl number is required");
  const int k = (cfg.k >= 0) ? cfg.k : default_energy_order(s.grid->n());

  FlowTrace trace;
  GeometryCache cache, scratch;
  build_geometry(s, cache, cfg.g_min);  // initial breakdowns propagate to the caller
  refresh_gauge(s, cache);

  auto emit = [&](double dt_used) {
    TickRow row;
    row.t = s.time;
    HigherDerivs hd = higher_derivatives(cache, k);
    row.energy = energy_from_cache(cache, hd, k, cfg.delta);
    row.H_L2_sq = h_l2_sq(cache);
    row.min_det_g = cache.min_det;
    row.dt = dt_used;
    if (trace.rows.empty() || trace.rows.back().t != row.t) trace.rows.push_back(row);
    return row.energy.E_k;
  };

  const double e0 = emit(0.0);
  const double ceiling = (cfg.energy_ceiling > 0.0) ? cfg.energy_ceiling : 1e3 * e0;
  if (obs) obs(s, cache, 0);

  const double t_eps = std::max(cfg.t_end, 1.0) * 1e-14;
  std::int64_t step = 0;
  double dt = 0.0;
  while (s.time < cfg.t_end - t_eps) {
    const double raw_dt =
        (cfg.dt > 0.0)
            ? cfg.dt
            : cfg.cfl * cache.grid->h_min() * cache.grid->h_min() / cache.max_ginv_norm;
    if (raw_dt < cfg.dt_min) {
      trace.status = RunStatus::blowup_suspected;
      trace.note = "step size underflow";
      break;
    }
    dt = std::min(raw_dt, cfg.t_end - s.time);
    try {
      rk4_step(s, dt, cfg.epsilon, cache, scratch, cfg.g_min);
      // In fixed-step mode pin the clock to step * dt so it cannot drift off
      // the sample times other runs compute.
      if (cfg.dt > 0.0 && dt == cfg.dt) s.time = cfg.dt * static_cast<double>(step + 1);
      if (cfg.filter_strength > 0.0) spectral_filter(s, cfg.filter_strength);
      build_geometry(s, cache, cfg.g_min);
    } catch (const DegenerateImmersion& err) {
      trace.status = RunStatus::degenerate;
      trace.note = err.what();
      break;
    } catch (const NonFiniteState& err) {
      trace.status = RunStatus::blowup_suspected;
      trace.note = err.what();
      break;
    }
    refresh_gauge(s, cache);
    ++step;
    if (obs) obs(s, cache, step);
    // Rows appear strictly at the output cadence, so a completed fixed-step
    // run emits exactly floor(t_end / (dt * output_every)) + 1 of them.
    if (step % cfg.output_every == 0) {
      const double ek = emit(dt);
      if (ek > ceiling) {
        trace.status = RunStatus::blowup_suspected;
        trace.note = "energy exceeded ceiling";
        break;
      }
    }
  }
  trace.final_time = s.time;
  return trace;
}

EvolutionResiduals verify_evolution_equations(const ImmersionState& s0, double epsilon,
                                              double dt_probe) {
  if (!(dt_probe > 0.0)) throw ConfigError("dt_probe must be positive");
  GeometryCache center = build_geometry(s0);
  GeometryCache scratch;

  ImmersionState sp = s0;
  rk4_step(sp, dt_probe, epsilon, center, scratch);
  GeometryCache plus = build_geometry(sp);

  ImmersionState sm = s0;
  rk4_step(sm, -dt_probe, epsilon, center, scratch);
  GeometryCache minus = build_geometry(sm);

  const std::int64_t nn = s0.grid->num_nodes();
  const int n = center.n, m = center.m, nsym = center.nsym;
  const double inv2dt = 1.0 / (2.0 * dt_probe);

  // Normal velocity J_eps H at the center, and the analytic metric rate
  // P_ij = -2 <J_eps H, A_ij>.
  Field vel;
  flow_velocity(center, epsilon, vel);
  TensorField P;
  P.s = 2;
  P.n = n;
  P.vdim = 1;
  P.data.resize(nn * P.comps());

  EvolutionResiduals out;
  double metric_max = 0.0, measure_max = 0.0;
  for (std::int64_t node = 0; node < nn; ++node) {
    const double* v = vel.data() + node * m;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double* Aij = center.second_form(node) + sym_index(n, i, j) * m;
        double dot = 0.0;
        for (int c = 0; c < m; ++c) dot += v[c] * Aij[c];
        P.data[node * P.comps() + i * n + j] = -2.0 * dot;
      }
    for (int sij = 0; sij < nsym; ++sij) {
      const double fd =
          (plus.g[node * nsym + sij] - minus.g[node * nsym + sij]) * inv2dt;
      // Map packed slot back to an (i, j) pair to read P.
      const int i = (n == 1 || sij == 0) ? 0 : (sij == 1 ? 0 : 1);
      const int j = (n == 1) ? 0 : (sij == 0 ? 0 : 1);
      const double rhs = P.data[node * P.comps() + i * n + j];
      metric_max = std::max(metric_max, std::abs(fd - rhs));
    }
    const double fd_mu = (plus.dmu[node] - minus.dmu[node]) * inv2dt;
    const double* H = center.H.data() + node * m;
    double h2 = 0.0;
    for (int c = 0; c < m; ++c) h2 += H[c] * H[c];
    measure_max = std::max(measure_max, std::abs(fd_mu + epsilon * h2 * center.dmu[node]));
  }

  // Christoffel rate: dt Gamma^k_ij = 1/2 g^{kl} (nab_i P_jl + nab_j P_il - nab_l P_ij).
  TensorField dP = covariant_derivative_plain(center, P);  // (k, i, j) full index
  const std::int64_t c3 = dP.comps();
  double chris_max = 0.0;
  for (std::int64_t node = 0; node < nn; ++node) {
    const double* gi = center.metric_inv(node);
    const double* d = dP.data.data() + node * c3;
    auto nab = [&](int a, int b, int c) { return d[(a * n + b) * n + c]; };
    for (int kk = 0; kk < n; ++kk)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double rhs = 0.0;
          for (int l = 0; l < n; ++l)
            rhs += 0.5 * gi[sym_index(n, kk, l)] *
                   (nab(i, j, l) + nab(j, i, l) - nab(l, i, j));
          const int idx = kk * nsym + sym_index(n, i, j);
          const double fd =
              (plus.gamma[node * n * nsym + idx] - minus.gamma[node * n * nsym + idx]) *
              inv2dt;
          chris_max = std::max(chris_max, std::abs(fd - rhs));
        }
  }

  out.metric_max = metric_max;
  out.measure_max = measure_max;
  out.christoffel_max = chris_max;
  return out;
}

double position_l2_distance(const ImmersionState& a, const ImmersionState& b) {
  if (!a.grid->same_shape(*b.grid))
    throw ConfigError("position distance requires identical grids");
  double cell = 1.0;
  for (int ax = 0; ax < a.grid->n(); ++ax) cell *= a.grid->h(ax);
  const std::int64_t total = static_cast<std::int64_t>(a.positions.size());
  const double sum = reduce_sum(total, [&](std::int64_t lo, std::int64_t hi) {
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double d = a.positions[i] - b.positions[i];
      acc += d * d;
    }
    return acc;
  });
  return std::sqrt(sum * cell);
}

EpsilonStudy epsilon_family_study(const ImmersionState& init,
                                  const std::vector<double>& epsilons,
                                  const FlowConfig& cfg) {
  if (epsilons.empty()) throw ConfigError("epsilon list must not be empty");
  if (!(cfg.dt > 0.0))
    throw ConfigError("the family study needs a fixed dt for matched sample times");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("family epsilons must be positive");

  EpsilonStudy study;
  study.epsilons = epsilons;

  auto capture = [&](double eps) {
    ImmersionState s = init;
    std::vector<Field> snaps;
    std::vector<double> times;
    FlowConfig c = cfg;
    c.epsilon = eps;
    Observer obs = [&](const ImmersionState& st, const GeometryCache&, std::int64_t step) {
      if (step % c.output_every != 0) return;
      snaps.push_back(st.positions);
      times.push_back(st.time);
    };
    FlowTrace tr = run_flow(s, c, obs);
    if (tr.status != RunStatus::completed)
      throw ConfigError("family run at eps = " + std::to_string(eps) +
                        " ended early: " + tr.note);
    return std::make_pair(std::move(snaps), std::move(times));
  };

  auto [ref_snaps, ref_times] = capture(0.0);
  study.sample_times = ref_times;

  double cell = 1.0;
  for (int ax = 0; ax < init.grid->n(); ++ax) cell *= init.grid->h(ax);
  auto l2 = [&](const Field& x, const Field& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      acc += d * d;
    }
    return std::sqrt(acc * cell);
  };

  std::vector<std::vector<Field>> all;
  for (double eps : epsilons) {
    auto [snaps, times] = capture(eps);
    if (times.size() != ref_times.size())
      throw ConfigError("family runs fell out of step");
    std::vector<double> dref(snaps.size());
    for (std::size_t i = 0; i < snaps.size(); ++i) dref[i] = l2(snaps[i], ref_snaps[i]);
    study.dist_to_reference.push_back(std::move(dref));
    all.push_back(std::move(snaps));
  }
  for (std::size_t e = 1; e < all.size(); ++e) {
    std::vector<double> dc(all[e].size());
    for (std::size_t i = 0; i < all[e].size(); ++i) dc[i] = l2(all[e][i], all[e - 1][i]);
    study.dist_consecutive.push_back(std::move(dc));
  }

  // Least-squares slope of log(final distance) against log(eps).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int ne = static_cast<int>(epsilons.size());
  for (int e = 0; e < ne; ++e) {
    const double x = std::log(epsilons[e]);
    const double y = std::log(study.dist_to_reference[e].back());
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  study.fitted_order = (ne * sxy - sx * sy) / (ne * sxx - sx * sx);
  return study;
}

void spectral_filter(ImmersionState& s, double strength) {
  if (!(strength > 0.0)) return;
  const PeriodicGrid& grid = *s.grid;
  const int m = grid.ambient();
  const std::int64_t nn = grid.num_nodes();

  if (grid.n() == 1) {
    const int N = grid.size(0);
    double* in = fftw_alloc_real(N);
    fftw_complex* freq = fftw_alloc_complex(N / 2 + 1);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(N, in, freq, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_1d(N, freq, in, FFTW_ESTIMATE);
    for (int c = 0; c < m; ++c) {
      for (int i = 0; i < N; ++i) in[i] = s.positions[i * m + c];
      fftw_execute(fwd);
      for (int kk = 0; kk <= N / 2; ++kk) {
        const double r = static_cast<double>(kk) / (N / 2);
        const double damp = std::exp(-strength * std::pow(r, 16));
        freq[kk][0] *= damp;
        freq[kk][1] *= damp;
      }
      fftw_execute(bwd);
      for (int i = 0; i < N; ++i) s.positions[i * m + c] = in[i] / N;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(in);
    fftw_free(freq);
  } else {
    const int N0 = grid.size(0), N1 = grid.size(1);
    double* in = fftw_alloc_real(static_cast<std::size_t>(N0) * N1);
    fftw_complex* freq = fftw_alloc_complex(static_cast<std::size_t>(N0) * (N1 / 2 + 1));
    fftw_plan fwd = fftw_plan_dft_r2c_2d(N0, N1, in, freq, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_2d(N0, N1, freq, in, FFTW_ESTIMATE);
    for (int c = 0; c < m; ++c) {
      for (std::int64_t i = 0; i < nn; ++i) in[i] = s.positions[i * m + c];
      fftw_execute(fwd);
      for (int k0 = 0; k0 < N0; ++k0) {
        const int f0 = (k0 <= N0 / 2) ? k0 : N0 - k0;
        const double r0 = static_cast<double>(f0) / (N0 / 2);
        for (int k1 = 0; k1 <= N1 / 2; ++k1) {
          const double r1 = static_cast<double>(k1) / (N1 / 2);
          const double damp =
              std::exp(-strength * (std::pow(r0, 16) + std::pow(r1, 16)));
          fftw_complex& z = freq[static_cast<std::size_t>(k0) * (N1 / 2 + 1) + k1];
          z[0] *= damp;
          z[1] *= damp;
        }
      }
      fftw_execute(bwd);
      const double scale = 1.0 / (static_cast<double>(N0) * N1);
      for (std::int64_t i = 0; i < nn; ++i) s.positions[i * m + c] = in[i] * scale;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(in);
    fftw_free(freq);
  }
}

}  // namespace smcf

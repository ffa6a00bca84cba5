#include "smcf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "smcf/errors.hpp"
#include "smcf/parallel.hpp"

namespace smcf {

namespace {

double det3_cols(const double* c0, const double* c1, const double* c2) {
  return c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) -
         c0[1] * (c1[0] * c2[2] - c1[2] * c2[0]) +
         c0[2] * (c1[0] * c2[1] - c1[1] * c2[0]);
}

double det4_cols(const double* c0, const double* c1, const double* c2, const double* c3) {
  // Expansion by 2x2 minors of the first two columns.
  auto m2 = [&](int r, int s) { return c0[r] * c1[s] - c0[s] * c1[r]; };
  auto n2 = [&](int r, int s) { return c2[r] * c3[s] - c2[s] * c3[r]; };
  return m2(0, 1) * n2(2, 3) - m2(0, 2) * n2(1, 3) + m2(0, 3) * n2(1, 2) +
         m2(1, 2) * n2(0, 3) - m2(1, 3) * n2(0, 2) + m2(2, 3) * n2(0, 1);
}

// Lower-triangular Cholesky factor of a packed symmetric positive matrix.
// out holds [L00] (n = 1) or [L00, L10, L11] (n = 2).
void chol_packed(int n, const double* s, double* out) {
  if (n == 1) {
    out[0] = std::sqrt(s[0]);
  } else {
    out[0] = std::sqrt(s[0]);
    out[1] = s[1] / out[0];
    out[2] = std::sqrt(std::max(s[2] - out[1] * out[1], 0.0));
  }
}

double spectral_norm_packed(int n, const double* s) {
  if (n == 1) return std::abs(s[0]);
  const double half_tr = 0.5 * (s[0] + s[2]);
  const double half_diff = 0.5 * (s[0] - s[2]);
  return half_tr + std::sqrt(half_diff * half_diff + s[1] * s[1]);
}

}  // namespace

void GeometryCache::j_matrix(std::int64_t node, double* out) const {
  const double* a = nu1.data() + node * m;
  const double* b = nu2.data() + node * m;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) out[r * m + c] = b[r] * a[c] - a[r] * b[c];
}

void GeometryCache::apply_J(std::int64_t node, const double* in, double* out) const {
  const double* a = nu1.data() + node * m;
  const double* b = nu2.data() + node * m;
  double da = 0.0, db = 0.0;
  for (int c = 0; c < m; ++c) {
    da += in[c] * a[c];
    db += in[c] * b[c];
  }
  for (int c = 0; c < m; ++c) out[c] = da * b[c] - db * a[c];
}

void GeometryCache::project_normal(std::int64_t node, double* v) const {
  const double* gi = metric_inv(node);
  double dots[2] = {0.0, 0.0};
  for (int l = 0; l < n; ++l) {
    const double* t = dF[l].data() + node * m;
    double d = 0.0;
    for (int c = 0; c < m; ++c) d += v[c] * t[c];
    dots[l] = d;
  }
  for (int k = 0; k < n; ++k) {
    double coef = 0.0;
    for (int l = 0; l < n; ++l) coef += gi[sym_index(n, k, l)] * dots[l];
    const double* t = dF[k].data() + node * m;
    for (int c = 0; c < m; ++c) v[c] -= coef * t[c];
  }
}

void build_geometry(const ImmersionState& s, GeometryCache& out, double g_min,
                    double frame_tol) {
  const PeriodicGrid& grid = *s.grid;
  const int n = grid.n();
  const int m = grid.ambient();
  const int nsym = sym_count(n);
  const std::int64_t nn = grid.num_nodes();

  if (!all_finite(s.positions)) throw NonFiniteState("immersion positions");

  out.grid = &grid;
  out.n = n;
  out.m = m;
  out.nsym = nsym;
  out.dF.resize(n);
  out.g.resize(nn * nsym);
  out.g_inv.resize(nn * nsym);
  out.det_g.resize(nn);
  out.dmu.resize(nn);
  out.gamma.resize(nn * n * nsym);
  out.A.resize(nn * nsym * m);
  out.H.resize(nn * m);
  out.nu1.resize(nn * m);
  out.nu2.resize(nn * m);

  for (int a = 0; a < n; ++a) deriv1(grid, s.positions, m, a, out.dF[a]);

  // Metric and determinant.
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      double* gp = out.g.data() + node * nsym;
      for (int i = 0; i < n; ++i) {
        const double* ti = out.dF[i].data() + node * m;
        for (int j = i; j < n; ++j) {
          const double* tj = out.dF[j].data() + node * m;
          double d = 0.0;
          for (int c = 0; c < m; ++c) d += ti[c] * tj[c];
          gp[sym_index(n, i, j)] = d;
        }
      }
      out.det_g[node] = (n == 1) ? gp[0] : gp[0] * gp[2] - gp[1] * gp[1];
    }
  });

  const auto [mind, min_node] = reduce_min(nn, [&](std::int64_t b, std::int64_t e) {
    double best = out.det_g[b];
    std::int64_t arg = b;
    for (std::int64_t node = b + 1; node < e; ++node)
      if (out.det_g[node] < best) {
        best = out.det_g[node];
        arg = node;
      }
    return std::pair<double, std::int64_t>{best, arg};
  });
  out.min_det = mind;
  if (!(mind >= g_min)) throw DegenerateImmersion(min_node, mind);

  // Inverse metric, measure, and the conditioning bound used by step control.
  double cell = 1.0;
  for (int a = 0; a < n; ++a) cell *= grid.h(a);
  out.max_ginv_norm = reduce_max(nn, [&](std::int64_t b, std::int64_t e) {
    double mx = 0.0;
    for (std::int64_t node = b; node < e; ++node) {
      const double* gp = out.g.data() + node * nsym;
      double* gi = out.g_inv.data() + node * nsym;
      const double det = out.det_g[node];
      if (n == 1) {
        gi[0] = 1.0 / gp[0];
      } else {
        gi[0] = gp[2] / det;
        gi[1] = -gp[1] / det;
        gi[2] = gp[0] / det;
      }
      out.dmu[node] = std::sqrt(det) * cell;
      mx = std::max(mx, spectral_norm_packed(n, gi));
    }
    return mx;
  });

  // Derivatives of the metric and second derivatives of the position.
  std::vector<Field> dg(n);
  for (int a = 0; a < n; ++a) deriv1(grid, out.g, nsym, a, dg[a]);
  std::vector<Field> d2(nsym);
  for (int a = 0; a < n; ++a) deriv2(grid, s.positions, m, a, d2[sym_index(n, a, a)]);
  if (n == 2) deriv1(grid, out.dF[1], m, 0, d2[sym_index(n, 0, 1)]);

  // Christoffel symbols, second fundamental form, mean curvature.
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      const double* gi = out.g_inv.data() + node * nsym;
      double* gam = out.gamma.data() + node * n * nsym;
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            double v = 0.0;
            for (int l = 0; l < n; ++l) {
              const double term = dg[i][node * nsym + sym_index(n, j, l)] +
                                  dg[j][node * nsym + sym_index(n, i, l)] -
                                  dg[l][node * nsym + sym_index(n, i, j)];
              v += gi[sym_index(n, k, l)] * term;
            }
            gam[k * nsym + sym_index(n, i, j)] = 0.5 * v;
          }

      double* Ap = out.A.data() + node * nsym * m;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const int sij = sym_index(n, i, j);
          double* a = Ap + sij * m;
          const double* raw = d2[sij].data() + node * m;
          for (int c = 0; c < m; ++c) a[c] = raw[c];
          for (int k = 0; k < n; ++k) {
            const double coef = gam[k * nsym + sij];
            const double* t = out.dF[k].data() + node * m;
            for (int c = 0; c < m; ++c) a[c] -= coef * t[c];
          }
          out.project_normal(node, a);
        }

      double* Hp = out.H.data() + node * m;
      if (n == 1) {
        for (int c = 0; c < m; ++c) Hp[c] = gi[0] * Ap[c];
      } else {
        for (int c = 0; c < m; ++c)
          Hp[c] = gi[0] * Ap[0 * m + c] + 2.0 * gi[1] * Ap[1 * m + c] +
                  gi[2] * Ap[2 * m + c];
      }
    }
  });

  // Orthonormal oriented normal frame from the gauge references.
  const auto [min_frame, frame_node] = reduce_min(nn, [&](std::int64_t b, std::int64_t e) {
    double worst = 1e300;
    std::int64_t arg = b;
    double w1[4], w2[4];
    for (std::int64_t node = b; node < e; ++node) {
      for (int c = 0; c < m; ++c) w1[c] = s.gauge_ref1[node * m + c];
      out.project_normal(node, w1);
      double n1 = 0.0;
      for (int c = 0; c < m; ++c) n1 += w1[c] * w1[c];
      n1 = std::sqrt(n1);
      double* f1 = out.nu1.data() + node * m;
      const double inv1 = (n1 > 0.0) ? 1.0 / n1 : 0.0;
      for (int c = 0; c < m; ++c) f1[c] = w1[c] * inv1;

      for (int c = 0; c < m; ++c) w2[c] = s.gauge_ref2[node * m + c];
      out.project_normal(node, w2);
      double dot = 0.0;
      for (int c = 0; c < m; ++c) dot += w2[c] * f1[c];
      for (int c = 0; c < m; ++c) w2[c] -= dot * f1[c];
      double n2 = 0.0;
      for (int c = 0; c < m; ++c) n2 += w2[c] * w2[c];
      n2 = std::sqrt(n2);
      double* f2 = out.nu2.data() + node * m;
      const double inv2 = (n2 > 0.0) ? 1.0 / n2 : 0.0;
      for (int c = 0; c < m; ++c) f2[c] = w2[c] * inv2;

      const double local = std::min(n1, n2);
      if (local < worst) {
        worst = local;
        arg = node;
      }

      double det;
      if (m == 3) {
        det = det3_cols(out.dF[0].data() + node * m, f1, f2);
      } else {
        det = det4_cols(out.dF[0].data() + node * m, out.dF[1].data() + node * m, f1, f2);
      }
      if (det < 0.0)
        for (int c = 0; c < m; ++c) f2[c] = -f2[c];
    }
    return std::pair<double, std::int64_t>{worst, arg};
  });
  if (!(min_frame >= frame_tol)) throw FrameGaugeFailure(frame_node, min_frame);
}

GeometryCache build_geometry(const ImmersionState& s, double g_min, double frame_tol) {
  GeometryCache c;
  build_geometry(s, c, g_min, frame_tol);
  return c;
}

void refresh_gauge(ImmersionState& s, const GeometryCache& cache) {
  s.gauge_ref1 = cache.nu1;
  s.gauge_ref2 = cache.nu2;
}

TensorField second_form_tensor(const GeometryCache& cache) {
  const std::int64_t nn = cache.grid->num_nodes();
  const int n = cache.n, m = cache.m;
  TensorField T;
  T.s = 2;
  T.n = n;
  T.vdim = m;
  const std::int64_t comps = T.comps();
  T.data.resize(nn * comps * m);
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      const double* Ap = cache.A.data() + node * cache.nsym * m;
      double* out = T.data.data() + node * comps * m;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double* src = Ap + sym_index(n, i, j) * m;
          double* dst = out + (i * n + j) * m;
          for (int c = 0; c < m; ++c) dst[c] = src[c];
        }
    }
  });
  return T;
}

namespace {

TensorField covariant_derivative_impl(const GeometryCache& cache, const TensorField& T,
                                      bool project_value) {
  const PeriodicGrid& grid = *cache.grid;
  const std::int64_t nn = grid.num_nodes();
  const int n = cache.n, v = T.vdim, s = T.s;
  const std::int64_t comps_in = T.comps();
  const int block_in = static_cast<int>(comps_in) * v;

  std::vector<Field> fd(n);
  for (int a = 0; a < n; ++a) deriv1(grid, T.data, block_in, a, fd[a]);

  // Digit strides: slot a of an s-index multi-index I has stride n^(s-1-a).
  std::vector<std::int64_t> stride(std::max(s, 1));
  for (int a = s - 1; a >= 0; --a)
    stride[a] = (a == s - 1) ? 1 : stride[a + 1] * n;

  TensorField out;
  out.s = s + 1;
  out.n = n;
  out.vdim = v;
  const std::int64_t comps_out = out.comps();
  out.data.resize(nn * comps_out * v);

  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      const double* gam = cache.gamma.data() + node * n * cache.nsym;
      double* dst_node = out.data.data() + node * comps_out * v;
      for (int kd = 0; kd < n; ++kd) {
        const double* fd_node = fd[kd].data() + node * block_in;
        for (std::int64_t I = 0; I < comps_in; ++I) {
          double* dst = dst_node + (kd * comps_in + I) * v;
          const double* raw = fd_node + I * v;
          for (int c = 0; c < v; ++c) dst[c] = raw[c];
          for (int a = 0; a < s; ++a) {
            const int ia = static_cast<int>((I / stride[a]) % n);
            for (int mm = 0; mm < n; ++mm) {
              const double coef = gam[mm * cache.nsym + sym_index(n, kd, ia)];
              const double* src =
                  T.data.data() + (node * comps_in + (I + (mm - ia) * stride[a])) * v;
              for (int c = 0; c < v; ++c) dst[c] -= coef * src[c];
            }
          }
          if (project_value) cache.project_normal(node, dst);
        }
      }
    }
  });
  return out;
}

}  // namespace

TensorField covariant_derivative(const GeometryCache& cache, const TensorField& T) {
  return covariant_derivative_impl(cache, T, /*project_value=*/true);
}

TensorField covariant_derivative_plain(const GeometryCache& cache, const TensorField& T) {
  return covariant_derivative_impl(cache, T, /*project_value=*/false);
}

namespace {

// Contract every covariant slot of the node block with the Cholesky factor of
// g^{-1}; afterwards the plain Euclidean norm of the block is |T|^2_g.
void whiten_block(int n, int s, int v, const double* chol_gi, double* block,
                  const std::vector<std::int64_t>& stride) {
  if (n == 1) {
    // Only one multi-index; every slot contributes the same scalar factor.
    double scale = 1.0;
    for (int a = 0; a < s; ++a) scale *= chol_gi[0];
    for (int c = 0; c < v; ++c) block[c] *= scale;
    return;
  }
  std::int64_t comps = 1;
  for (int a = 0; a < s; ++a) comps *= n;
  const double L00 = chol_gi[0], L10 = chol_gi[1], L11 = chol_gi[2];
  for (int a = 0; a < s; ++a) {
    const std::int64_t st = stride[a];
    for (std::int64_t I = 0; I < comps; ++I) {
      if ((I / st) % 2 != 0) continue;
      double* b0 = block + I * v;
      double* b1 = block + (I + st) * v;
      for (int c = 0; c < v; ++c) {
        const double t0 = b0[c], t1 = b1[c];
        b0[c] = L00 * t0 + L10 * t1;
        b1[c] = L11 * t1;
      }
    }
  }
}

std::vector<std::int64_t> slot_strides(int n, int s) {
  std::vector<std::int64_t> stride(std::max(s, 1));
  for (int a = s - 1; a >= 0; --a)
    stride[a] = (a == s - 1) ? 1 : stride[a + 1] * n;
  return stride;
}

}  // namespace

Field tensor_norm_sq(const GeometryCache& cache, const TensorField& T) {
  const std::int64_t nn = cache.grid->num_nodes();
  const int n = cache.n, v = T.vdim, s = T.s;
  const std::int64_t block = T.comps() * v;
  const auto stride = slot_strides(n, s);
  Field out(nn);
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    std::vector<double> scratch(block);
    for (std::int64_t node = b; node < e; ++node) {
      double chol[3];
      chol_packed(n, cache.metric_inv(node), chol);
      std::memcpy(scratch.data(), T.data.data() + node * block, block * sizeof(double));
      whiten_block(n, s, v, chol, scratch.data(), stride);
      double acc = 0.0;
      for (std::int64_t i = 0; i < block; ++i) acc += scratch[i] * scratch[i];
      out[node] = acc;
    }
  });
  return out;
}

Field tensor_inner(const GeometryCache& cache, const TensorField& T, const TensorField& S) {
  const std::int64_t nn = cache.grid->num_nodes();
  const int n = cache.n, v = T.vdim, s = T.s;
  const std::int64_t block = T.comps() * v;
  const auto stride = slot_strides(n, s);
  Field out(nn);
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    std::vector<double> s1(block), s2(block);
    for (std::int64_t node = b; node < e; ++node) {
      double chol[3];
      chol_packed(n, cache.metric_inv(node), chol);
      std::memcpy(s1.data(), T.data.data() + node * block, block * sizeof(double));
      std::memcpy(s2.data(), S.data.data() + node * block, block * sizeof(double));
      whiten_block(n, s, v, chol, s1.data(), stride);
      whiten_block(n, s, v, chol, s2.data(), stride);
      double acc = 0.0;
      for (std::int64_t i = 0; i < block; ++i) acc += s1[i] * s2[i];
      out[node] = acc;
    }
  });
  return out;
}

double integrate(const GeometryCache& cache, const Field& scalar) {
  const std::int64_t nn = cache.grid->num_nodes();
  return reduce_sum(nn, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t node = b; node < e; ++node) acc += scalar[node] * cache.dmu[node];
    return acc;
  });
}

double integrate_flat(const PeriodicGrid& grid, const Field& scalar) {
  double cell = 1.0;
  for (int a = 0; a < grid.n(); ++a) cell *= grid.h(a);
  const std::int64_t nn = grid.num_nodes();
  const double sum = reduce_sum(nn, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t node = b; node < e; ++node) acc += scalar[node];
    return acc;
  });
  return sum * cell;
}

HigherDerivs higher_derivatives(const GeometryCache& cache, int max_level) {
  HigherDerivs hd;
  hd.levels.reserve(max_level + 1);
  hd.levels.push_back(second_form_tensor(cache));
  for (int l = 1; l <= max_level; ++l)
    hd.levels.push_back(covariant_derivative(cache, hd.levels.back()));
  return hd;
}

EnergyReport energy_from_cache(const GeometryCache& cache, const HigherDerivs& hd,
                               int k, double delta) {
  EnergyReport r;
  r.k = k;
  r.delta = delta;
  const std::int64_t nn = cache.grid->num_nodes();
  const int m = cache.m;
  r.vol = reduce_sum(nn, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t node = b; node < e; ++node) acc += cache.dmu[node];
    return acc;
  });
  const double p = cache.n + delta;
  const double hp_int = reduce_sum(nn, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t node = b; node < e; ++node) {
      const double* Hp = cache.H.data() + node * m;
      double h2 = 0.0;
      for (int c = 0; c < m; ++c) h2 += Hp[c] * Hp[c];
      acc += std::pow(h2, 0.5 * p) * cache.dmu[node];
    }
    return acc;
  });
  r.H_Lp = std::pow(hp_int, 1.0 / p);
  r.A_l2_sq.resize(k + 1);
  for (int l = 0; l <= k; ++l) {
    const Field nsq = tensor_norm_sq(cache, hd.levels[l]);
    r.A_l2_sq[l] = integrate(cache, nsq);
    r.A_sobolev_sq += r.A_l2_sq[l];
  }
  r.E_k = r.vol + r.H_Lp * r.H_Lp + r.A_sobolev_sq;
  return r;
}

EnergyReport compute_energy(const ImmersionState& s, int k, double delta) {
  GeometryCache cache = build_geometry(s);
  HigherDerivs hd = higher_derivatives(cache, k);
  return energy_from_cache(cache, hd, k, delta);
}

}  // namespace smcf

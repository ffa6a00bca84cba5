#include "smcf/uniqueness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "smcf/errors.hpp"
#include "smcf/parallel.hpp"

namespace smcf {

namespace {

// Sharpest discrete equivalence constants between the two metrics: the ratio
// of the extreme generalized eigenvalues of g_b with respect to g_a over the
// whole grid. A per-node condition number would read 1 for curves regardless
// of how different the metrics are, so the global ratio is the quantity that
// actually certifies C1 g <= g~ <= C2 g.
double equivalence_condition(const GeometryCache& ca, const GeometryCache& cb) {
  const int n = ca.n;
  const std::int64_t num = ca.grid->num_nodes();
  auto eigs = [&](std::int64_t v, double& lo, double& hi) {
    const double* gia = ca.metric_inv(v);
    const double* gb = cb.metric(v);
    if (n == 1) {
      lo = hi = gia[0] * gb[0];
      return;
    }
    const double m00 = gia[0] * gb[0] + gia[1] * gb[1];
    const double m11 = gia[1] * gb[1] + gia[2] * gb[2];
    const double det = (gia[0] * gia[2] - gia[1] * gia[1]) *
                       (gb[0] * gb[2] - gb[1] * gb[1]);
    const double tr = m00 + m11;
    const double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
    hi = 0.5 * (tr + disc);
    lo = (hi > 0.0) ? det / hi : 0.0;
  };
  const double hi_all = reduce_max(num, [&](std::int64_t b, std::int64_t e) {
    double best = 0.0;
    for (std::int64_t v = b; v < e; ++v) {
      double lo, hi;
      eigs(v, lo, hi);
      best = std::max(best, hi);
    }
    return best;
  });
  const double inv_lo_all = reduce_max(num, [&](std::int64_t b, std::int64_t e) {
    double best = 0.0;
    for (std::int64_t v = b; v < e; ++v) {
      double lo, hi;
      eigs(v, lo, hi);
      if (lo > 0.0) best = std::max(best, 1.0 / lo);
    }
    return best;
  });
  return hi_all * inv_lo_all;
}

TensorField tensor_diff(const TensorField& x, const TensorField& y) {
  TensorField d;
  d.s = x.s;
  d.n = x.n;
  d.vdim = x.vdim;
  d.data.resize(x.data.size());
  parallel_for(static_cast<std::int64_t>(x.data.size()),
               [&](std::int64_t b, std::int64_t e) {
                 for (std::int64_t i = b; i < e; ++i)
                   d.data[i] = x.data[i] - y.data[i];
               });
  return d;
}

// (0,2) tensor g_a - g_b with scalar values.
TensorField metric_gap_tensor(const GeometryCache& ca, const GeometryCache& cb) {
  const int n = ca.n;
  const std::int64_t num = ca.grid->num_nodes();
  TensorField out;
  out.s = 2;
  out.n = n;
  out.vdim = 1;
  out.data.resize(num * n * n);
  parallel_for(num, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      const double* ga = ca.metric(v);
      const double* gb = cb.metric(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out.data[(v * n + i) * n + j] =
              ga[sym_index(n, i, j)] - gb[sym_index(n, i, j)];
    }
  });
  return out;
}

// Gamma_a - Gamma_b with the upper index lowered by the background metric, so
// the whole difference is a (0,3) tensor measured in background norms.
TensorField connection_gap_tensor(const GeometryCache& ca, const GeometryCache& cb,
                                  const GeometryCache& bg) {
  const int n = ca.n;
  const int nsym = ca.nsym;
  const std::int64_t num = ca.grid->num_nodes();
  TensorField out;
  out.s = 3;
  out.n = n;
  out.vdim = 1;
  out.data.resize(num * n * n * n);
  parallel_for(num, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      const double* ka = ca.christoffel(v);
      const double* kb = cb.christoffel(v);
      const double* g0 = bg.metric(v);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int mm = 0; mm < n; ++mm)
              acc += g0[sym_index(n, k, mm)] *
                     (ka[mm * nsym + sym_index(n, i, j)] -
                      kb[mm * nsym + sym_index(n, i, j)]);
            out.data[((v * n + k) * n + i) * n + j] = acc;
          }
    }
  });
  return out;
}

// Mixed-slot squared norm of I - Q per node: the source slot contracts with
// the inverse background metric, the target slot with the target state's
// metric. Because Q carries g_b to g_a exactly, swapping the two states leaves
// this quantity unchanged up to roundoff.
Field identity_gap_sq(const TransportField& tr, const GeometryCache& ca,
                      const GeometryCache& bg) {
  const int n = ca.n;
  const std::int64_t num = ca.grid->num_nodes();
  Field out(num);
  parallel_for(num, [&](std::int64_t b, std::int64_t e) {
    double M[4];
    for (std::int64_t v = b; v < e; ++v) {
      const double* Q = tr.Q.data() + v * n * n;
      const double* ga = ca.metric(v);
      const double* g0i = bg.metric_inv(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          M[i * n + j] = (i == j ? 1.0 : 0.0) - Q[i * n + j];
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k)
              acc += g0i[sym_index(n, j, k)] * ga[sym_index(n, i, l)] *
                     M[i * n + j] * M[l * n + k];
      out[v] = acc;
    }
  });
  return out;
}

Field squared(const Field& f) {
  Field out(f.size());
  parallel_for(static_cast<std::int64_t>(f.size()),
               [&](std::int64_t b, std::int64_t e) {
                 for (std::int64_t i = b; i < e; ++i) out[i] = f[i] * f[i];
               });
  return out;
}

double field_max(const Field& f) {
  return reduce_max(static_cast<std::int64_t>(f.size()),
                    [&](std::int64_t b, std::int64_t e) {
                      double best = 0.0;
                      for (std::int64_t i = b; i < e; ++i)
                        best = std::max(best, f[i]);
                      return best;
                    });
}

void check_shapes(const ImmersionState& a, const ImmersionState& b,
                  const GeometryCache& background, const char* who) {
  if (!a.grid || !b.grid || background.grid == nullptr)
    throw ConfigError(std::string(who) + ": missing grid");
  if (!a.grid->same_shape(*b.grid) || !a.grid->same_shape(*background.grid))
    throw ConfigError(std::string(who) +
                      ": states and background must share one grid shape");
}

}  // namespace

LParts L_functional(const ImmersionState& a, const ImmersionState& b,
                    const GeometryCache& background, double cond_max) {
  check_shapes(a, b, background, "L_functional");
  const GeometryCache ca = build_geometry(a);
  const GeometryCache cb = build_geometry(b);

  const double cond = equivalence_condition(ca, cb);
  if (!(cond < cond_max)) throw MetricsInequivalent(cond);

  const TransportField tr = build_transport(ca, cb);

  LParts parts;

  // L1: Grassmannian distance, transported second-form gap, transported
  // gap of its covariant derivative.
  parts.L1 = integrate(background, squared(tr.distance));
  const TensorField Aa = second_form_tensor(ca);
  const TensorField Ab = second_form_tensor(cb);
  parts.L1 += integrate(
      background, tensor_norm_sq(ca, tensor_diff(Aa, transport_tensor(tr, Ab))));
  const TensorField Da = covariant_derivative(ca, Aa);
  const TensorField Db = covariant_derivative(cb, Ab);
  parts.L1 += integrate(
      background, tensor_norm_sq(ca, tensor_diff(Da, transport_tensor(tr, Db))));

  // L2: metric and connection gaps in frozen background norms.
  parts.L2 = integrate(background, tensor_norm_sq(background, metric_gap_tensor(ca, cb)));
  parts.L2 += integrate(background,
                        tensor_norm_sq(background, connection_gap_tensor(ca, cb, background)));

  // L3: how far the coordinate identity is from the transport-induced
  // tangent isometry.
  parts.L3 = integrate(background, identity_gap_sq(tr, ca, background));

  parts.total = parts.L1 + parts.L2 + parts.L3;
  return parts;
}

UniquenessReport gronwall_study(const std::vector<ImmersionState>& run_a,
                                const std::vector<ImmersionState>& run_b,
                                const std::vector<double>& times,
                                const GeometryCache& background) {
  if (run_a.size() != run_b.size() || run_a.size() != times.size())
    throw ConfigError("gronwall_study: run_a, run_b and times must have equal length");

  UniquenessReport rep;
  rep.rows.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    LSample row;
    row.t = times[i];
    try {
      row.value = L_functional(run_a[i], run_b[i], background);
    } catch (const CutLocus&) {
      row.cut_locus = true;
    }
    rep.rows.push_back(row);
  }

  // Least-squares slope of log(total) over rows with a positive value.
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::int64_t cnt = 0;
  for (const LSample& r : rep.rows) {
    if (r.cut_locus || !(r.value.total > 0.0)) continue;
    const double y = std::log(r.value.total);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
    ++cnt;
  }
  const double denom = cnt > 0 ? stt - st * st / cnt : 0.0;
  if (cnt >= 2 && denom > 0.0) {
    rep.fitted_C = (sty - st * sy / cnt) / denom;
    rep.fit_valid = true;
  }

  // Envelope check, re-based at the first positive row of every
  // cut-locus-free window.
  bool in_window = false;
  bool have_base = false;
  double t0 = 0.0, l0 = 0.0;
  for (const LSample& r : rep.rows) {
    if (r.cut_locus) {
      in_window = false;
      have_base = false;
      continue;
    }
    if (!in_window) {
      in_window = true;
      ++rep.windows;
    }
    if (!have_base) {
      if (r.value.total > 0.0) {
        have_base = true;
        t0 = r.t;
        l0 = r.value.total;
      }
      continue;
    }
    if (rep.fit_valid) {
      const double ratio =
          r.value.total / (std::exp(rep.fitted_C * (r.t - t0)) * l0);
      rep.envelope_max = std::max(rep.envelope_max, ratio);
    }
  }
  rep.envelope_ok = rep.envelope_max <= 1.0 + 1e-2;
  return rep;
}

TensorField rough_laplacian(const GeometryCache& cache, const TensorField& T) {
  const int n = cache.n;
  const TensorField D2 = covariant_derivative(cache, covariant_derivative(cache, T));
  TensorField out;
  out.s = T.s;
  out.n = n;
  out.vdim = T.vdim;
  const std::int64_t comps = T.comps();
  const std::int64_t num = cache.grid->num_nodes();
  out.data.resize(num * comps * T.vdim);
  const std::int64_t comps2 = comps * n * n;
  parallel_for(num, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      const double* gi = cache.metric_inv(v);
      for (std::int64_t I = 0; I < comps; ++I)
        for (int c = 0; c < T.vdim; ++c) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k)
              acc += gi[sym_index(n, l, k)] *
                     D2.data[(v * comps2 + (static_cast<std::int64_t>(l) * n + k) * comps + I) *
                                 T.vdim +
                             c];
          out.data[(v * comps + I) * T.vdim + c] = acc;
        }
    }
  });
  return out;
}

DiagnosticsReport auxiliary_diagnostics(const ImmersionState& a,
                                        const ImmersionState& b,
                                        const TensorField& phi,
                                        const GeometryCache& background,
                                        double cond_max) {
  check_shapes(a, b, background, "auxiliary_diagnostics");
  const GeometryCache ca = build_geometry(a);
  const GeometryCache cb = build_geometry(b);
  if (phi.n != ca.n || phi.vdim != ca.m)
    throw ConfigError(
        "auxiliary_diagnostics: phi must be a covariant tensor with "
        "ambient-vector values over the second state");

  const double cond = equivalence_condition(ca, cb);
  if (!(cond < cond_max)) throw MetricsInequivalent(cond);

  const TransportField tr = build_transport(ca, cb);

  DiagnosticsReport rep;
  auto fill = [&](const Field& sq, double& mx, double& l2) {
    Field root(sq.size());
    parallel_for(static_cast<std::int64_t>(sq.size()),
                 [&](std::int64_t bb, std::int64_t ee) {
                   for (std::int64_t i = bb; i < ee; ++i)
                     root[i] = std::sqrt(std::max(sq[i], 0.0));
                 });
    mx = field_max(root);
    l2 = std::sqrt(std::max(integrate(background, sq), 0.0));
  };

  // Left side: transport the tensor, take the rough Laplacian on each side,
  // and compare on the first state.
  const TensorField lap_a = rough_laplacian(ca, transport_tensor(tr, phi));
  const TensorField lap_b = rough_laplacian(cb, phi);
  fill(tensor_norm_sq(ca, tensor_diff(lap_a, transport_tensor(tr, lap_b))),
       rep.lhs_max, rep.lhs_l2);

  // Right-side ingredients.
  fill(squared(tr.distance), rep.dist_max, rep.dist_l2);
  const TensorField Aa = second_form_tensor(ca);
  const TensorField Ab = second_form_tensor(cb);
  fill(tensor_norm_sq(ca, tensor_diff(Aa, transport_tensor(tr, Ab))),
       rep.second_form_gap_max, rep.second_form_gap_l2);
  fill(tensor_norm_sq(background, metric_gap_tensor(ca, cb)), rep.metric_gap_max,
       rep.metric_gap_l2);
  fill(tensor_norm_sq(background, connection_gap_tensor(ca, cb, background)),
       rep.connection_gap_max, rep.connection_gap_l2);
  return rep;
}

}  // namespace smcf

#include "smcf/grassmann.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "smcf/errors.hpp"
#include "smcf/flow.hpp"
#include "smcf/parallel.hpp"

namespace smcf {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

double dot(const double* a, const double* b, int m) {
  double s = 0.0;
  for (int c = 0; c < m; ++c) s += a[c] * b[c];
  return s;
}

double det3(const double* c0, const double* c1, const double* c2) {
  return c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) -
         c1[0] * (c0[1] * c2[2] - c0[2] * c2[1]) +
         c2[0] * (c0[1] * c1[2] - c0[2] * c1[1]);
}

double det4(const double* c0, const double* c1, const double* c2,
            const double* c3) {
  double det = 0.0;
  for (int r = 0; r < 4; ++r) {
    double minor_cols[3][3];
    int rr = 0;
    for (int row = 0; row < 4; ++row) {
      if (row == r) continue;
      minor_cols[0][rr] = c1[row];
      minor_cols[1][rr] = c2[row];
      minor_cols[2][rr] = c3[row];
      ++rr;
    }
    const double minor =
        det3(minor_cols[0], minor_cols[1], minor_cols[2]);
    det += ((r % 2 == 0) ? 1.0 : -1.0) * c0[r] * minor;
  }
  return det;
}

// Two-pass Gram-Schmidt of n ambient columns; throws when dependent.
void gs_columns(const double* in, int n, int m, double* out, std::int64_t node) {
  for (int i = 0; i < n; ++i) {
    double* v = out + i * m;
    std::memcpy(v, in + i * m, sizeof(double) * m);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < i; ++j) {
        const double* e = out + j * m;
        const double p = dot(v, e, m);
        for (int c = 0; c < m; ++c) v[c] -= p * e[c];
      }
    }
    const double nrm = std::sqrt(dot(v, v, m));
    if (!(nrm > 1e-12))
      throw DegenerateImmersion(static_cast<int>(node), nrm * nrm);
    for (int c = 0; c < m; ++c) v[c] /= nrm;
  }
}

void frame_at(const GeometryCache& cache, std::int64_t node, double* frame) {
  const int n = cache.n, m = cache.m;
  double cols[8];
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c) cols[i * m + c] = cache.dF[i][node * m + c];
  gs_columns(cols, n, m, frame, node);
}

void wedge6(const double* x, const double* y, double* out) {
  for (int p = 0; p < 6; ++p) {
    const int i = kPairs[p][0], j = kPairs[p][1];
    out[p] = x[i] * y[j] - x[j] * y[i];
  }
}

void pluecker_of_frame(const double* frame, int n, double* out) {
  if (n == 1) {
    out[0] = frame[0];
    out[1] = frame[1];
    out[2] = frame[2];
  } else {
    wedge6(frame, frame + 4, out);
  }
}

// Orthonormal basis of the tangent space of the Grassmannian at the plane
// (frame, nu1, nu2), as wedge coordinates: 2n vectors, index i * 2 + a where
// slot i of the wedge is replaced by normal a.
void tangent_basis(const double* frame, const double* nu1, const double* nu2,
                   int n, double* B) {
  if (n == 1) {
    for (int c = 0; c < 3; ++c) {
      B[0 * 3 + c] = nu1[c];
      B[1 * 3 + c] = nu2[c];
    }
  } else {
    const double* e1 = frame;
    const double* e2 = frame + 4;
    wedge6(nu1, e2, B + 0 * 6);  // (i, a) = (0, nu1)
    wedge6(nu2, e2, B + 1 * 6);  // (0, nu2)
    wedge6(e1, nu1, B + 2 * 6);  // (1, nu1)
    wedge6(e1, nu2, B + 3 * 6);  // (1, nu2)
  }
}

struct PrincipalData {
  int n;
  double sigma[2];          // signed cosines, |sigma| <= 1
  double sin_t[2];          // |gv - sigma fu|, a robust sine near zero
  double theta[2];          // angles in [0, pi), via atan2(sin, cos)
  double fu[8], w[8];       // rotation-plane frames (w skipped when aligned)
  bool rotate[2];
};

// Signed principal decomposition of the pair (frameA <- frameB): singular
// value decomposition of frameA^T frameB with the orientation sign carried on
// the last pair, so oriented planes at an angle beyond pi/2 are recognized.
PrincipalData principal_pairs(const double* frameA, const double* frameB, int n,
                              int m) {
  PrincipalData pd;
  pd.n = n;
  double gv[8];
  if (n == 1) {
    const double mdot = dot(frameA, frameB, m);
    pd.sigma[0] = std::clamp(mdot, -1.0, 1.0);
    for (int c = 0; c < m; ++c) {
      pd.fu[c] = frameA[c];
      gv[c] = frameB[c];
    }
  } else {
    Eigen::Matrix2d M;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        M(i, j) = dot(frameA + i * m, frameB + j * m, m);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(
        M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d W = svd.matrixU();
    Eigen::Matrix2d V = svd.matrixV();
    Eigen::Vector2d sv = svd.singularValues();
    if (W.determinant() * V.determinant() < 0.0) {
      sv(1) = -sv(1);
      W.col(1) = -W.col(1);
    }
    for (int i = 0; i < 2; ++i) {
      pd.sigma[i] = std::clamp(sv(i), -1.0, 1.0);
      for (int c = 0; c < m; ++c) {
        pd.fu[i * m + c] =
            frameA[0 * m + c] * W(0, i) + frameA[1 * m + c] * W(1, i);
        gv[i * m + c] = frameB[0 * m + c] * V(0, i) + frameB[1 * m + c] * V(1, i);
      }
    }
  }
  // The residual of the source vector against the target one gives the sine
  // robustly, so tiny angles do not suffer the arccos rounding cliff.
  for (int i = 0; i < n; ++i) {
    double r[4], rs = 0.0;
    for (int c = 0; c < m; ++c) {
      r[c] = gv[i * m + c] - pd.sigma[i] * pd.fu[i * m + c];
      rs += r[c] * r[c];
    }
    pd.sin_t[i] = std::sqrt(rs);
    pd.theta[i] = std::atan2(pd.sin_t[i], pd.sigma[i]);
    pd.rotate[i] = pd.sin_t[i] >= 1e-14;
    if (pd.rotate[i])
      for (int c = 0; c < m; ++c) pd.w[i * m + c] = r[c] / pd.sin_t[i];
  }
  return pd;
}

// Ambient rotation built from the principal pairs: identity plus a rotation by
// theta_i in each (fu_i, w_i) plane, taking the source vectors onto the target.
void build_rotation(const PrincipalData& pd, int m, double* U) {
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) U[r * m + c] = (r == c) ? 1.0 : 0.0;
  for (int i = 0; i < pd.n; ++i) {
    if (!pd.rotate[i]) continue;  // the pair is already aligned
    const double* fu = pd.fu + i * m;
    const double* w = pd.w + i * m;
    const double cm1 = pd.sigma[i] - 1.0;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        U[r * m + c] += cm1 * (fu[r] * fu[c] + w[r] * w[c]) +
                        pd.sin_t[i] * (fu[r] * w[c] - w[r] * fu[c]);
  }
}

}  // namespace

GrassPoint grass_point(const double* tangents, int n, int m) {
  if ((n != 1 && n != 2) || m != n + 2)
    throw ConfigError("grass_point: supported shapes are 1-planes in R^3 and "
                      "2-planes in R^4");
  GrassPoint p;
  p.n = n;
  p.m = m;
  p.frame.resize(static_cast<std::size_t>(n) * m);
  p.nu1.resize(m);
  p.nu2.resize(m);
  gs_columns(tangents, n, m, p.frame.data(), -1);

  // Complete with an oriented normal pair from the canonical axes.
  double collected[2][4];
  int found = 0;
  for (int axis = 0; axis < m && found < 2; ++axis) {
    double v[4] = {0.0, 0.0, 0.0, 0.0};
    v[axis] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < n; ++i) {
        const double* e = p.frame.data() + i * m;
        const double pr = dot(v, e, m);
        for (int c = 0; c < m; ++c) v[c] -= pr * e[c];
      }
      for (int j = 0; j < found; ++j) {
        const double pr = dot(v, collected[j], m);
        for (int c = 0; c < m; ++c) v[c] -= pr * collected[j][c];
      }
    }
    const double nrm = std::sqrt(dot(v, v, m));
    if (nrm < 0.35) continue;
    for (int c = 0; c < m; ++c) collected[found][c] = v[c] / nrm;
    ++found;
  }
  for (int c = 0; c < m; ++c) {
    p.nu1[c] = collected[0][c];
    p.nu2[c] = collected[1][c];
  }
  const double orient =
      (m == 3) ? det3(p.frame.data(), p.nu1.data(), p.nu2.data())
               : det4(p.frame.data(), p.frame.data() + 4, p.nu1.data(),
                      p.nu2.data());
  if (orient < 0.0)
    for (int c = 0; c < m; ++c) p.nu2[c] = -p.nu2[c];
  return p;
}

GrassPoint grass_point_at(const GeometryCache& cache, std::int64_t node) {
  GrassPoint p;
  p.n = cache.n;
  p.m = cache.m;
  p.frame.resize(static_cast<std::size_t>(p.n) * p.m);
  p.nu1.resize(p.m);
  p.nu2.resize(p.m);
  frame_at(cache, node, p.frame.data());
  for (int c = 0; c < p.m; ++c) {
    p.nu1[c] = cache.nu1[node * p.m + c];
    p.nu2[c] = cache.nu2[node * p.m + c];
  }
  return p;
}

int pluecker_dim(int n) { return n == 1 ? 3 : 6; }

std::vector<double> pluecker(const GrassPoint& p) {
  std::vector<double> out(pluecker_dim(p.n));
  pluecker_of_frame(p.frame.data(), p.n, out.data());
  return out;
}

GrassField gauss_map(const GeometryCache& cache) {
  GrassField gf;
  gf.n = cache.n;
  gf.m = cache.m;
  gf.pdim = pluecker_dim(cache.n);
  const std::int64_t nodes = cache.grid->num_nodes();
  gf.frames.resize(nodes * gf.n * gf.m);
  gf.rho.resize(nodes * gf.pdim);
  parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      double* frame = gf.frames.data() + v * gf.n * gf.m;
      frame_at(cache, v, frame);
      pluecker_of_frame(frame, gf.n, gf.rho.data() + v * gf.pdim);
    }
  });
  return gf;
}

TransportPack geodesic_and_transport(const GrassPoint& to, const GrassPoint& from,
                                     double cut_tol, std::int64_t node) {
  if (to.n != from.n || to.m != from.m)
    throw ConfigError("geodesic_and_transport: plane shapes differ");
  TransportPack pack;
  pack.n = to.n;
  pack.m = to.m;
  const PrincipalData pd =
      principal_pairs(to.frame.data(), from.frame.data(), to.n, to.m);
  double dist_sq = 0.0, worst = 0.0;
  pack.angles.resize(pack.n);
  for (int i = 0; i < pack.n; ++i) {
    pack.angles[i] = pd.theta[i];
    dist_sq += pd.theta[i] * pd.theta[i];
    worst = std::max(worst, pd.theta[i]);
  }
  if (worst >= kHalfPi - cut_tol)
    throw CutLocus(static_cast<int>(node), worst);
  pack.distance = std::sqrt(dist_sq);
  pack.U.resize(static_cast<std::size_t>(pack.m) * pack.m);
  build_rotation(pd, pack.m, pack.U.data());
  return pack;
}

void apply_transport(const TransportPack& pack, const double* x, double* y) {
  const int m = pack.m;
  for (int r = 0; r < m; ++r) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += pack.U[r * m + c] * x[c];
    y[r] = s;
  }
}

TransportField build_transport(const GeometryCache& to, const GeometryCache& from,
                               double cut_tol) {
  if (to.grid == nullptr || from.grid == nullptr ||
      !to.grid->same_shape(*from.grid))
    throw ConfigError("build_transport: immersions live on different grids");
  const int n = to.n, m = to.m, nsym = to.nsym;
  const std::int64_t nodes = to.grid->num_nodes();
  TransportField tr;
  tr.n = n;
  tr.m = m;
  tr.distance.resize(nodes);
  tr.angle_max.resize(nodes);
  tr.U.resize(nodes * m * m);
  tr.Q.resize(nodes * n * n);
  tr.Qstar.resize(nodes * n * n);

  parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      double* U = tr.U.data() + v * m * m;
      double* Q = tr.Q.data() + v * n * n;
      double* Qs = tr.Qstar.data() + v * n * n;

      bool identical = true;
      for (int i = 0; i < n && identical; ++i)
        for (int c = 0; c < m; ++c)
          if (to.dF[i][v * m + c] != from.dF[i][v * m + c]) {
            identical = false;
            break;
          }
      if (identical) {
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c) U[r * m + c] = (r == c) ? 1.0 : 0.0;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c)
            Q[r * n + c] = Qs[r * n + c] = (r == c) ? 1.0 : 0.0;
        tr.distance[v] = 0.0;
        tr.angle_max[v] = 0.0;
        continue;
      }

      double frameA[8], frameB[8];
      frame_at(to, v, frameA);
      frame_at(from, v, frameB);
      const PrincipalData pd = principal_pairs(frameA, frameB, n, m);
      double dist_sq = 0.0, worst = 0.0;
      for (int i = 0; i < n; ++i) {
        dist_sq += pd.theta[i] * pd.theta[i];
        worst = std::max(worst, pd.theta[i]);
      }
      tr.distance[v] = std::sqrt(dist_sq);
      tr.angle_max[v] = worst;
      build_rotation(pd, m, U);

      // Q = g^{-1} dF^T U dF~ ; Qstar = g Q g~^{-1} (inverse transpose of Q).
      double UdFt[8];  // columns U * dF~_j
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < m; ++r) {
          double s = 0.0;
          for (int c = 0; c < m; ++c)
            s += U[r * m + c] * from.dF[j][v * m + c];
          UdFt[j * m + r] = s;
        }
      double T2[4];  // dF^T UdFt
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int c = 0; c < m; ++c)
            s += to.dF[i][v * m + c] * UdFt[j * m + c];
          T2[i * n + j] = s;
        }
      const double* gi = to.metric_inv(v);
      const double* gA = to.metric(v);
      const double* giB = from.metric_inv(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            s += gi[sym_index(n, i, k)] * T2[k * n + j];
          Q[i * n + j] = s;
        }
      (void)nsym;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              s += gA[sym_index(n, i, k)] * Q[k * n + l] *
                   giB[sym_index(n, l, j)];
          Qs[i * n + j] = s;
        }
    }
  });

  double worst = 0.0;
  for (std::int64_t v = 0; v < nodes; ++v) {
    if (tr.angle_max[v] >= kHalfPi - cut_tol)
      throw CutLocus(static_cast<int>(v), tr.angle_max[v]);
    worst = std::max(worst, tr.angle_max[v]);
  }
  tr.max_angle = worst;
  return tr;
}

TensorField transport_tensor(const TransportField& tr, const TensorField& src) {
  const int n = tr.n, m = tr.m, s = src.s;
  if (src.n != n || src.vdim != m)
    throw ConfigError("transport_tensor: tensor shape does not match transport");
  const std::int64_t comps = src.comps();
  const std::int64_t nodes =
      static_cast<std::int64_t>(src.data.size()) / (comps * m);
  TensorField out;
  out.s = s;
  out.n = n;
  out.vdim = m;
  out.data.resize(src.data.size());

  parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
    std::vector<double> rotated(static_cast<std::size_t>(comps) * m);
    for (std::int64_t v = b; v < e; ++v) {
      const double* U = tr.U.data() + v * m * m;
      const double* Qs = tr.Qstar.data() + v * n * n;
      const double* in = src.data.data() + v * comps * m;
      double* res = out.data.data() + v * comps * m;
      // Rotate the values of every slot combination.
      for (std::int64_t J = 0; J < comps; ++J)
        for (int r = 0; r < m; ++r) {
          double acc = 0.0;
          for (int c = 0; c < m; ++c) acc += U[r * m + c] * in[J * m + c];
          rotated[J * m + r] = acc;
        }
      // Contract each covariant slot with Qstar.
      for (std::int64_t I = 0; I < comps; ++I) {
        double* o = res + I * m;
        for (int c = 0; c < m; ++c) o[c] = 0.0;
        for (std::int64_t J = 0; J < comps; ++J) {
          double coeff = 1.0;
          std::int64_t ii = I, jj = J;
          for (int a = s - 1; a >= 0; --a) {
            const int ia = static_cast<int>(ii % n), ja = static_cast<int>(jj % n);
            coeff *= Qs[ia * n + ja];
            ii /= n;
            jj /= n;
          }
          if (coeff == 0.0) continue;
          for (int c = 0; c < m; ++c) o[c] += coeff * rotated[J * m + c];
        }
      }
    }
  });
  return out;
}

Field tension_field(const GrassField& rho, const GeometryCache& cache) {
  const PeriodicGrid& grid = *cache.grid;
  const int n = cache.n, m = cache.m, pdim = rho.pdim;
  const std::int64_t nodes = grid.num_nodes();

  std::vector<Field> d1(n), d2(n);
  for (int axis = 0; axis < n; ++axis) {
    deriv1(grid, rho.rho, pdim, axis, d1[axis]);
    deriv2(grid, rho.rho, pdim, axis, d2[axis]);
  }
  Field d01;
  if (n == 2) deriv1(grid, d1[0], pdim, 1, d01);

  Field tau(nodes * pdim);
  parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      const double* gi = cache.metric_inv(v);
      const double* gam = cache.christoffel(v);
      double lap[6];
      for (int c = 0; c < pdim; ++c) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const int sij = sym_index(n, i, j);
            double second;
            if (i == j)
              second = d2[i][v * pdim + c];
            else
              second = d01[v * pdim + c];
            double corr = 0.0;
            for (int k = 0; k < n; ++k)
              corr += gam[k * cache.nsym + sij] * d1[k][v * pdim + c];
            acc += gi[sij] * (second - corr);
          }
        lap[c] = acc;
      }
      // Project onto the tangent space of the Grassmannian at rho(v).
      const double* frame = rho.frames.data() + v * n * m;
      double B[24];
      tangent_basis(frame, cache.nu1.data() + v * m, cache.nu2.data() + v * m,
                    n, B);
      double* t = tau.data() + v * pdim;
      for (int c = 0; c < pdim; ++c) t[c] = 0.0;
      for (int b2 = 0; b2 < 2 * n; ++b2) {
        const double* Bb = B + b2 * pdim;
        const double coef = dot(lap, Bb, pdim);
        for (int c = 0; c < pdim; ++c) t[c] += coef * Bb[c];
      }
    }
  });
  return tau;
}

Field gauss_complex_rotate(const GrassField& rho, const GeometryCache& cache,
                           const Field& v_in) {
  const int n = cache.n, m = cache.m, pdim = rho.pdim;
  const std::int64_t nodes = cache.grid->num_nodes();
  if (v_in.size() != static_cast<std::size_t>(nodes) * pdim)
    throw ConfigError("gauss_complex_rotate: field size mismatch");
  Field out(v_in.size());
  parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      const double* frame = rho.frames.data() + v * n * m;
      double B[24];
      tangent_basis(frame, cache.nu1.data() + v * m, cache.nu2.data() + v * m,
                    n, B);
      const double* x = v_in.data() + v * pdim;
      double* y = out.data() + v * pdim;
      for (int c = 0; c < pdim; ++c) y[c] = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* B1 = B + (i * 2 + 0) * pdim;
        const double* B2 = B + (i * 2 + 1) * pdim;
        const double c1 = dot(x, B1, pdim);
        const double c2 = dot(x, B2, pdim);
        // The quarter turn of the normal factor: B_{i,1} -> B_{i,2} -> -B_{i,1}.
        for (int c = 0; c < pdim; ++c) y[c] += c1 * B2[c] - c2 * B1[c];
      }
    }
  });
  return out;
}

double gauss_flow_residual(const ImmersionState& s, double epsilon,
                           double dt_probe) {
  if (dt_probe <= 0.0)
    throw ConfigError("gauss_flow_residual: dt_probe must be positive");
  GeometryCache center = build_geometry(s);
  const GrassField gf = gauss_map(center);
  const Field tau = tension_field(gf, center);
  const Field jtau = gauss_complex_rotate(gf, center, tau);
  const std::int64_t nodes = s.grid->num_nodes();
  const int pdim = gf.pdim;

  GeometryCache scratch;
  ImmersionState plus = s, minus = s;
  rk4_step(plus, dt_probe, epsilon, center, scratch);
  rk4_step(minus, -dt_probe, epsilon, center, scratch);
  const GrassField gp = gauss_map(build_geometry(plus));
  const GrassField gm = gauss_map(build_geometry(minus));

  return reduce_max(nodes, [&](std::int64_t b, std::int64_t e) {
    double worst = 0.0;
    for (std::int64_t v = b; v < e; ++v) {
      double acc = 0.0;
      for (int c = 0; c < pdim; ++c) {
        const double fd = (gp.rho[v * pdim + c] - gm.rho[v * pdim + c]) /
                          (2.0 * dt_probe);
        const double rhs =
            epsilon * tau[v * pdim + c] + jtau[v * pdim + c];
        const double d = fd - rhs;
        acc += d * d;
      }
      worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
  });
}

GaussEnergyReport gauss_energy(const ImmersionState& state, int k) {
  if (k < 0 || k > 3)
    throw ConfigError("gauss_energy: k must lie in [0, 3]");
  GeometryCache cache = build_geometry(state);
  const PeriodicGrid& grid = *cache.grid;
  const int n = cache.n, m = cache.m;
  const std::int64_t nodes = grid.num_nodes();
  const GrassField gf = gauss_map(cache);
  const int pdim = gf.pdim;

  GaussEnergyReport rep;
  rep.k = k;

  {
    Field sq(nodes);
    parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t v = b; v < e; ++v)
        sq[v] = dot(gf.rho.data() + v * pdim, gf.rho.data() + v * pdim, pdim);
    });
    rep.rho_mass = integrate(cache, sq);
  }

  // The wedge differential as a one-slot tensor with plain pdim values.
  TensorField T;
  T.s = 1;
  T.n = n;
  T.vdim = pdim;
  T.data.resize(nodes * n * pdim);
  for (int axis = 0; axis < n; ++axis) {
    Field d;
    deriv1(grid, gf.rho, pdim, axis, d);
    parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t v = b; v < e; ++v)
        for (int c = 0; c < pdim; ++c)
          T.data[(v * n + axis) * pdim + c] = d[v * pdim + c];
    });
  }

  const HigherDerivs hd = higher_derivatives(cache, k);

  for (int level = 0; level <= k; ++level) {
    if (level > 0) T = covariant_derivative_plain(cache, T);
    rep.ambient_levels.push_back(integrate(cache, tensor_norm_sq(cache, T)));

    // Split off the component normal to the Grassmannian at each node.
    TensorField N = T;
    const std::int64_t comps = T.comps();
    parallel_for(nodes, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t v = b; v < e; ++v) {
        const double* frame = gf.frames.data() + v * n * m;
        double B[24];
        tangent_basis(frame, cache.nu1.data() + v * m,
                      cache.nu2.data() + v * m, n, B);
        for (std::int64_t I = 0; I < comps; ++I) {
          double* val = N.data.data() + (v * comps + I) * pdim;
          for (int b2 = 0; b2 < 2 * n; ++b2) {
            const double* Bb = B + b2 * pdim;
            const double coef = dot(val, Bb, pdim);
            for (int c = 0; c < pdim; ++c) val[c] -= coef * Bb[c];
          }
        }
      }
    });
    const double normal_part = integrate(cache, tensor_norm_sq(cache, N));
    rep.normal_levels.push_back(normal_part);
    rep.intrinsic_levels.push_back(
        integrate(cache, tensor_norm_sq(cache, hd.levels[level])) + normal_part);
  }

  rep.ambient = rep.rho_mass;
  rep.intrinsic = rep.rho_mass;
  for (int level = 0; level <= k; ++level) {
    rep.ambient += rep.ambient_levels[level];
    rep.intrinsic += rep.intrinsic_levels[level];
  }
  rep.gap = std::abs(rep.ambient - rep.intrinsic);
  return rep;
}

}  // namespace smcf

#pragma once

#include <vector>

#include "smcf/state.hpp"

namespace smcf {

/// Index of the packed symmetric pair (i, j): n = 1 stores [00]; n = 2 stores
/// [00, 01, 11].
inline int sym_index(int n, int i, int j) {
  (void)n;
  if (i > j) std::swap(i, j);
  return (i == 0) ? j : 2;
}

/// Number of packed symmetric entries for an n x n symmetric matrix.
inline int sym_count(int n) { return n * (n + 1) / 2; }

/// All first-order geometric data of an immersion at one instant: coordinate
/// tangents, induced metric with inverse/determinant/measure, Christoffel
/// symbols, second fundamental form, mean curvature vector, and the oriented
/// orthonormal normal frame (nu1, nu2). Built by build_geometry; the layouts
/// are node-major flat arrays so kernels stream over them.
struct GeometryCache {
  const PeriodicGrid* grid = nullptr;
  int n = 0;       // intrinsic dimension
  int m = 0;       // ambient dimension, n + 2
  int nsym = 0;    // packed symmetric size

  std::vector<Field> dF;  // dF[axis]: num_nodes * m
  Field g;        // num_nodes * nsym
  Field g_inv;    // num_nodes * nsym
  Field det_g;    // num_nodes
  Field dmu;      // num_nodes (sqrt(det g) * cell volume)
  Field gamma;    // num_nodes * n * nsym, Gamma^k_{ij} at [k * nsym + sym(i,j)]
  Field A;        // num_nodes * nsym * m, normal-valued
  Field H;        // num_nodes * m, normal-valued
  Field nu1;      // num_nodes * m
  Field nu2;      // num_nodes * m
  double max_ginv_norm = 0.0;  // max over nodes of the spectral norm of g^{-1}
  double min_det = 0.0;

  const double* metric(std::int64_t node) const { return g.data() + node * nsym; }
  const double* metric_inv(std::int64_t node) const { return g_inv.data() + node * nsym; }
  const double* christoffel(std::int64_t node) const { return gamma.data() + node * n * nsym; }
  const double* second_form(std::int64_t node) const { return A.data() + node * nsym * m; }
  const double* mean_curv(std::int64_t node) const { return H.data() + node * m; }

  /// The bundle rotation J as an m x m row-major matrix at a node:
  /// J v = <v, nu1> nu2 - <v, nu2> nu1.
  void j_matrix(std::int64_t node, double* out) const;

  /// Apply J to an ambient vector at a node (valid input: any vector; only the
  /// normal part survives).
  void apply_J(std::int64_t node, const double* in, double* out) const;

  /// Remove the tangential part of an ambient vector at a node (in place).
  void project_normal(std::int64_t node, double* v) const;
};

/// Build the full first-order cache. Throws NonFiniteState if positions are
/// not finite, DegenerateImmersion if det g drops below g_min, and
/// FrameGaugeFailure if a gauge reference projects below frame_tol.
void build_geometry(const ImmersionState& s, GeometryCache& out,
                    double g_min = 1e-8, double frame_tol = 1e-6);

GeometryCache build_geometry(const ImmersionState& s, double g_min = 1e-8,
                             double frame_tol = 1e-6);

/// Copy the cache's normal frame back into the state's gauge references so the
/// next build starts from a nearby gauge.
void refresh_gauge(ImmersionState& s, const GeometryCache& cache);

/// A fully indexed covariant tensor field with vector values: s covariant
/// slots, value dimension vdim. Component (i_1, ..., i_s) of the value lives at
/// data[(node * n^s + I) * vdim + c] with I the base-n number i_1 i_2 ... i_s.
struct TensorField {
  int s = 0;
  int n = 0;
  int vdim = 0;
  Field data;

  std::int64_t comps() const {
    std::int64_t c = 1;
    for (int a = 0; a < s; ++a) c *= n;
    return c;
  }
};

/// Unpack the cached second fundamental form into a full (0,2) tensor field
/// with ambient-vector values.
TensorField second_form_tensor(const GeometryCache& cache);

/// Covariant derivative of a normal-bundle-valued covariant tensor: the new
/// derivative slot becomes the FIRST index, the raw coordinate derivative is
/// projected back to the normal bundle, and each original slot picks up a
/// -Gamma correction.
TensorField covariant_derivative(const GeometryCache& cache, const TensorField& T);

/// Covariant derivative of a tensor with plain (scalar-tuple) values: same
/// slot corrections, no normal projection of the value.
TensorField covariant_derivative_plain(const GeometryCache& cache, const TensorField& T);

/// Per-node squared norm |T|^2_g: every covariant slot contracted with g^{-1},
/// values contracted Euclidean.
Field tensor_norm_sq(const GeometryCache& cache, const TensorField& T);

/// Per-node inner product <T, S>_g for tensors of identical shape.
Field tensor_inner(const GeometryCache& cache, const TensorField& T, const TensorField& S);

/// Integral of a per-node scalar field against the induced measure.
double integrate(const GeometryCache& cache, const Field& scalar);

/// Integral against the flat parameter measure (product of grid spacings).
double integrate_flat(const PeriodicGrid& grid, const Field& scalar);

/// Covariant derivatives of the second fundamental form up to a given order:
/// levels[l] holds the (0, l + 2) tensor with normal values.
struct HigherDerivs {
  std::vector<TensorField> levels;
};
HigherDerivs higher_derivatives(const GeometryCache& cache, int max_level);

/// The scale-invariant-indexed energy ladder: volume, the L^p curvature norm
/// with p = n + delta, and the integrated squared covariant derivatives of the
/// second fundamental form through level k.
struct EnergyReport {
  double vol = 0.0;
  double H_Lp = 0.0;                 // (integral |H|^p dmu)^(1/p)
  std::vector<double> A_l2_sq;       // level l = 0..k
  double A_sobolev_sq = 0.0;         // sum of A_l2_sq
  double E_k = 0.0;                  // vol + H_Lp^2 + A_sobolev_sq
  int k = 0;
  double delta = 0.0;
};

EnergyReport energy_from_cache(const GeometryCache& cache, const HigherDerivs& hd,
                               int k, double delta);
EnergyReport compute_energy(const ImmersionState& s, int k, double delta);

/// Default derivative order for the energy: floor(n / 2) + 1.
inline int default_energy_order(int n) { return n / 2 + 1; }

}  // namespace smcf

#pragma once

#include <cstdint>
#include <vector>

#include "smcf/geometry.hpp"
#include "smcf/state.hpp"

namespace smcf {

/// An oriented n-plane in R^m (m = n + 2): a column-orthonormal tangent frame
/// together with an oriented orthonormal basis of its normal plane, chosen so
/// the combined ambient basis is positively oriented.
struct GrassPoint {
  int n = 0, m = 0;
  std::vector<double> frame;  // n columns of length m, column i at offset i*m
  std::vector<double> nu1, nu2;  // the oriented normal pair, length m each
};

/// Orthonormalize n independent ambient vectors (column i at tangents + i*m)
/// and complete them with an oriented normal pair. Throws DegenerateImmersion
/// when the columns are numerically dependent.
GrassPoint grass_point(const double* tangents, int n, int m);

/// The plane of the immersed surface at one node: frame from the coordinate
/// tangents, normal pair taken from the cache (already oriented).
GrassPoint grass_point_at(const GeometryCache& cache, std::int64_t node);

/// Dimension of the wedge-coordinate space: 3 for curves, 6 for surfaces.
int pluecker_dim(int n);

/// Unit wedge coordinates of the oriented plane.
std::vector<double> pluecker(const GrassPoint& p);

/// The Gauss map of an immersion: per-node frames and wedge coordinates.
struct GrassField {
  int n = 0, m = 0, pdim = 0;
  Field frames;  // node-major, layout of GrassPoint::frame per node
  Field rho;     // node-major wedge coordinates, pdim per node
};
GrassField gauss_map(const GeometryCache& cache);

/// Geodesic data between two planes: signed principal angles, the geodesic
/// distance, and the ambient rotation U carrying the source plane pair onto
/// the target pair (tangent to tangent, normal to normal).
struct TransportPack {
  int n = 0, m = 0;
  std::vector<double> angles;  // n signed principal angles, target vs source
  double distance = 0.0;       // sqrt(sum of squared angles)
  std::vector<double> U;       // m x m row-major rotation, source -> target
};

/// Build the unique minimizing-geodesic transport from `from` onto `to`.
/// Throws CutLocus when any principal angle reaches pi/2 - cut_tol (the node
/// argument only labels the error message).
TransportPack geodesic_and_transport(const GrassPoint& to, const GrassPoint& from,
                                     double cut_tol = 1e-3,
                                     std::int64_t node = -1);

/// y = U x for an ambient vector x of length m.
void apply_transport(const TransportPack& pack, const double* x, double* y);

/// Node-wise transports between two immersions on the same grid, with the
/// induced coordinate maps on tangent and cotangent factors:
///   Q      : coordinate vectors of `from` -> coordinate vectors of `to`
///   Qstar  : covariant slot transport (the inverse-transpose of Q)
/// Nodes where the two immersions carry bit-identical first-order data get
/// exact identity maps, so comparing a state with itself yields exact zeros.
struct TransportField {
  int n = 0, m = 0;
  Field distance;  // per-node geodesic distance
  Field angle_max; // per-node largest |principal angle|
  Field U;         // node-major m*m
  Field Q, Qstar;  // node-major n*n row-major
  double max_angle = 0.0;
};
TransportField build_transport(const GeometryCache& to, const GeometryCache& from,
                               double cut_tol = 1e-3);

/// Carry a covariant tensor with normal-bundle values from the `from`
/// immersion onto the `to` immersion: values rotate by U, each covariant slot
/// maps by Qstar. An isometry of the pointwise tensor norms.
TensorField transport_tensor(const TransportField& tr, const TensorField& src);

/// Tangential (to the Grassmannian) part of the coordinate Laplacian of the
/// wedge field: the tension field of the Gauss map. pdim components per node.
Field tension_field(const GrassField& rho, const GeometryCache& cache);

/// The complex structure of the Grassmannian applied to a tangent-to-G field:
/// rotates the normal factor of each plane by a quarter turn.
Field gauss_complex_rotate(const GrassField& rho, const GeometryCache& cache,
                           const Field& v);

/// Residual of the Gauss-map evolution law along the flow: compares the
/// central time difference of the wedge field over +-dt_probe steps against
/// eps * tau + J tau evaluated at the center. Returns the largest pointwise
/// Euclidean norm of the mismatch.
double gauss_flow_residual(const ImmersionState& s, double epsilon,
                           double dt_probe);

/// Sobolev energy of the Gauss map through order k (k <= 3), computed twice:
/// route (i) accumulates ambient covariant derivatives of the wedge
/// differential; route (ii) replaces their G-tangential parts by the
/// intrinsic second-form derivatives and keeps the G-normal remainders.
struct GaussEnergyReport {
  int k = 0;
  double rho_mass = 0.0;  // integral of |rho|^2 (equals the volume)
  std::vector<double> ambient_levels;    // integral of |D^l d rho|^2, l = 0..k
  std::vector<double> intrinsic_levels;  // integral of |grad^l A|^2 + normal part
  std::vector<double> normal_levels;     // the G-normal remainders alone
  double ambient = 0.0, intrinsic = 0.0, gap = 0.0;
};
GaussEnergyReport gauss_energy(const ImmersionState& state, int k);

}  // namespace smcf

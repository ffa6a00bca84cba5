#pragma once

#include <stdexcept>
#include <string>

namespace smcf {

/// Base class for all failures raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// det g fell below the positivity floor at some node.
struct DegenerateImmersion : Error {
  int node;
  double det_g;
  DegenerateImmersion(int node_, double det_g_)
      : Error("degenerate immersion: det g = " + std::to_string(det_g_) +
              " at node " + std::to_string(node_)),
        node(node_), det_g(det_g_) {}
};

/// The reference normal frame lost track of the normal plane at some node.
struct FrameGaugeFailure : Error {
  int node;
  double residual_norm;
  FrameGaugeFailure(int node_, double norm_)
      : Error("normal frame gauge failure: projected reference norm = " +
              std::to_string(norm_) + " at node " + std::to_string(node_)),
        node(node_), residual_norm(norm_) {}
};

/// A state or velocity contains NaN or infinity.
struct NonFiniteState : Error {
  explicit NonFiniteState(const std::string& where)
      : Error("non-finite state detected in " + where) {}
};

/// Two tangent planes are too close to antipodal for a unique geodesic.
struct CutLocus : Error {
  int node;
  double max_angle;
  CutLocus(int node_, double angle_)
      : Error("cut locus: principal angle " + std::to_string(angle_) +
              " at node " + std::to_string(node_)),
        node(node_), max_angle(angle_) {}
};

/// Two metrics being compared are not uniformly equivalent on this grid.
struct MetricsInequivalent : Error {
  double condition;
  explicit MetricsInequivalent(double cond_)
      : Error("metrics inequivalent: condition number " + std::to_string(cond_)),
        condition(cond_) {}
};

/// Frenet data undefined where curvature vanishes.
struct VanishingCurvature : Error {
  int node;
  double kappa;
  VanishingCurvature(int node_, double kappa_)
      : Error("vanishing curvature " + std::to_string(kappa_) + " at node " +
              std::to_string(node_)),
        node(node_), kappa(kappa_) {}
};

/// A run configuration failed validation; message names the offending field.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

}  // namespace smcf

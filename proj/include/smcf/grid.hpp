#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace smcf {

/// Uniform periodic grid on the flat torus [0, 2*pi)^n, n in {1, 2}.
/// Nodes are row-major: node = i0 * sizes[1] + i1 (i1 = 0 for n = 1).
/// Fields over the grid are flat arrays, node-major: data[node * m + c].
class PeriodicGrid {
 public:
  explicit PeriodicGrid(const std::vector<int>& sizes);

  int n() const { return n_; }
  int ambient() const { return n_ + 2; }
  int size(int axis) const { return sizes_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double h_min() const;
  std::int64_t num_nodes() const { return num_nodes_; }

  /// Parameter coordinate of a node along an axis.
  double coord(int axis, std::int64_t node) const;
  std::array<int, 2> indices(std::int64_t node) const;
  std::int64_t node_at(int i0, int i1 = 0) const;

  /// Periodic neighbor at offset in {-2,-1,+1,+2} along axis (slot 0..3).
  std::int64_t neighbor(int axis, int slot, std::int64_t node) const {
    return nbr_[(static_cast<std::int64_t>(axis) * 4 + slot) * num_nodes_ + node];
  }

  bool same_shape(const PeriodicGrid& other) const {
    return n_ == other.n_ && sizes_ == other.sizes_;
  }

 private:
  int n_;
  std::array<int, 2> sizes_;
  std::array<double, 2> h_;
  std::int64_t num_nodes_;
  std::vector<std::int32_t> nbr_;
};

using Field = std::vector<double>;

/// 4th-order central first derivative along an axis, all m components.
void deriv1(const PeriodicGrid& grid, const Field& f, int m, int axis, Field& out);

/// 4th-order central pure second derivative along an axis.
void deriv2(const PeriodicGrid& grid, const Field& f, int m, int axis, Field& out);

bool all_finite(const Field& f);

}  // namespace smcf

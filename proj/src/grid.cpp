#include "smcf/grid.hpp"

#include <cmath>
#include <numbers>

#include "smcf/errors.hpp"
#include "smcf/parallel.hpp"

namespace smcf {

PeriodicGrid::PeriodicGrid(const std::vector<int>& sizes) {
  if (sizes.empty() || sizes.size() > 2)
    throw ConfigError("grid: expected 1 or 2 axis sizes, got " +
                      std::to_string(sizes.size()));
  n_ = static_cast<int>(sizes.size());
  sizes_ = {1, 1};
  for (int a = 0; a < n_; ++a) {
    if (sizes[a] < 16 || sizes[a] % 2 != 0)
      throw ConfigError("grid: axis " + std::to_string(a) + " size " +
                        std::to_string(sizes[a]) + " must be even and >= 16");
    sizes_[a] = sizes[a];
  }
  h_ = {0.0, 0.0};
  for (int a = 0; a < n_; ++a)
    h_[a] = 2.0 * std::numbers::pi / static_cast<double>(sizes_[a]);
  num_nodes_ = static_cast<std::int64_t>(sizes_[0]) * sizes_[1];

  nbr_.resize(static_cast<std::size_t>(n_) * 4 * num_nodes_);
  const int offsets[4] = {-2, -1, 1, 2};
  for (int a = 0; a < n_; ++a) {
    const int na = sizes_[a];
    for (int slot = 0; slot < 4; ++slot) {
      std::int32_t* row = nbr_.data() + (static_cast<std::int64_t>(a) * 4 + slot) * num_nodes_;
      for (std::int64_t node = 0; node < num_nodes_; ++node) {
        int i0 = static_cast<int>(node / sizes_[1]);
        int i1 = static_cast<int>(node % sizes_[1]);
        int& ia = (a == 0) ? i0 : i1;
        ia = (ia + offsets[slot] + na) % na;
        row[node] = static_cast<std::int32_t>(i0 * sizes_[1] + i1);
      }
    }
  }
}

double PeriodicGrid::h_min() const {
  double hm = h_[0];
  for (int a = 1; a < n_; ++a) hm = std::min(hm, h_[a]);
  return hm;
}

double PeriodicGrid::coord(int axis, std::int64_t node) const {
  const auto ij = indices(node);
  return h_[axis] * static_cast<double>(ij[static_cast<std::size_t>(axis)]);
}

std::array<int, 2> PeriodicGrid::indices(std::int64_t node) const {
  return {static_cast<int>(node / sizes_[1]), static_cast<int>(node % sizes_[1])};
}

std::int64_t PeriodicGrid::node_at(int i0, int i1) const {
  const int a = ((i0 % sizes_[0]) + sizes_[0]) % sizes_[0];
  const int b = ((i1 % sizes_[1]) + sizes_[1]) % sizes_[1];
  return static_cast<std::int64_t>(a) * sizes_[1] + b;
}

void deriv1(const PeriodicGrid& grid, const Field& f, int m, int axis, Field& out) {
  const std::int64_t nn = grid.num_nodes();
  out.resize(static_cast<std::size_t>(nn) * m);
  const double scale = 1.0 / (12.0 * grid.h(axis));
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      const double* fm2 = f.data() + grid.neighbor(axis, 0, node) * m;
      const double* fm1 = f.data() + grid.neighbor(axis, 1, node) * m;
      const double* fp1 = f.data() + grid.neighbor(axis, 2, node) * m;
      const double* fp2 = f.data() + grid.neighbor(axis, 3, node) * m;
      double* o = out.data() + node * m;
      for (int c = 0; c < m; ++c)
        o[c] = scale * (-fp2[c] + 8.0 * fp1[c] - 8.0 * fm1[c] + fm2[c]);
    }
  });
}

void deriv2(const PeriodicGrid& grid, const Field& f, int m, int axis, Field& out) {
  const std::int64_t nn = grid.num_nodes();
  out.resize(static_cast<std::size_t>(nn) * m);
  const double scale = 1.0 / (12.0 * grid.h(axis) * grid.h(axis));
  parallel_for(nn, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t node = b; node < e; ++node) {
      const double* f0 = f.data() + node * m;
      const double* fm2 = f.data() + grid.neighbor(axis, 0, node) * m;
      const double* fm1 = f.data() + grid.neighbor(axis, 1, node) * m;
      const double* fp1 = f.data() + grid.neighbor(axis, 2, node) * m;
      const double* fp2 = f.data() + grid.neighbor(axis, 3, node) * m;
      double* o = out.data() + node * m;
      for (int c = 0; c < m; ++c)
        o[c] = scale * (-fp2[c] + 16.0 * fp1[c] - 30.0 * f0[c] + 16.0 * fm1[c] - fm2[c]);
    }
  });
}

bool all_finite(const Field& f) {
  for (double v : f)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace smcf

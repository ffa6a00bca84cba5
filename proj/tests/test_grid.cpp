#include <doctest.h>

#include <cmath>
#include <numbers>

#include "smcf/errors.hpp"
#include "smcf/grid.hpp"
#include "smcf/parallel.hpp"

using namespace smcf;

TEST_CASE("grid rejects invalid shapes") {
  CHECK_THROWS_AS(PeriodicGrid({8}), ConfigError);      // below minimum
  CHECK_THROWS_AS(PeriodicGrid({17}), ConfigError);     // odd
  CHECK_THROWS_AS(PeriodicGrid({16, 16, 16}), ConfigError);
  CHECK_THROWS_AS(PeriodicGrid(std::vector<int>{}), ConfigError);
}

TEST_CASE("node indexing round-trips and wraps") {
  PeriodicGrid g({16, 32});
  CHECK(g.num_nodes() == 512);
  for (std::int64_t node : {0L, 17L, 511L}) {
    auto [i0, i1] = g.indices(node);
    CHECK(g.node_at(i0, i1) == node);
  }
  CHECK(g.node_at(-1, 0) == g.node_at(15, 0));
  CHECK(g.node_at(0, 32) == g.node_at(0, 0));
  // Neighbor table agrees with index arithmetic.
  const std::int64_t node = g.node_at(0, 31);
  CHECK(g.neighbor(1, 2, node) == g.node_at(0, 0));   // +1 wraps
  CHECK(g.neighbor(1, 0, node) == g.node_at(0, 29));  // -2
  CHECK(g.neighbor(0, 1, node) == g.node_at(15, 31)); // -1 wraps
}

TEST_CASE("first derivative has the exact stencil symbol on a pure mode") {
  PeriodicGrid g({64});
  const double h = g.h(0);
  const int wave = 3;
  Field f(g.num_nodes()), out;
  for (std::int64_t i = 0; i < g.num_nodes(); ++i) f[i] = std::sin(wave * g.coord(0, i));
  deriv1(g, f, 1, 0, out);
  // The 5-point stencil multiplies mode w by w * (8 sin(wh) - sin(2wh)) / (6wh).
  const double symbol = (8.0 * std::sin(wave * h) - std::sin(2.0 * wave * h)) / (6.0 * h);
  for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
    CHECK(out[i] == doctest::Approx(symbol * std::cos(wave * g.coord(0, i))).epsilon(1e-12));
  }
}

TEST_CASE("derivatives converge at fourth order") {
  auto max_err = [](int N, bool second) {
    PeriodicGrid g({N});
    Field f(g.num_nodes()), out;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) f[i] = std::exp(std::sin(g.coord(0, i)));
    if (second)
      deriv2(g, f, 1, 0, out);
    else
      deriv1(g, f, 1, 0, out);
    double err = 0.0;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const double t = g.coord(0, i);
      const double c = std::cos(t), s = std::sin(t);
      const double exact = second ? std::exp(s) * (c * c - s) : std::exp(s) * c;
      err = std::max(err, std::abs(out[i] - exact));
    }
    return err;
  };
  for (bool second : {false, true}) {
    const double e1 = max_err(32, second), e2 = max_err(64, second);
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.7);
    CHECK(order < 4.5);
  }
}

TEST_CASE("2-d mixed data differentiates along the correct axis") {
  PeriodicGrid g({32, 16});
  Field f(g.num_nodes() * 2), out;
  for (std::int64_t node = 0; node < g.num_nodes(); ++node) {
    const double x = g.coord(0, node), y = g.coord(1, node);
    f[node * 2 + 0] = std::sin(x) * std::cos(y);
    f[node * 2 + 1] = std::cos(2 * y);
  }
  deriv1(g, f, 2, 1, out);
  // Axis-wiring check, not an accuracy check: the short axis has only 16
  // points, so allow the corresponding truncation error.
  for (std::int64_t node = 0; node < g.num_nodes(); ++node) {
    const double x = g.coord(0, node), y = g.coord(1, node);
    CHECK(out[node * 2 + 0] ==
          doctest::Approx(-std::sin(x) * std::sin(y)).epsilon(2e-2));
    CHECK(out[node * 2 + 1] == doctest::Approx(-2 * std::sin(2 * y)).epsilon(2e-2));
  }
}

TEST_CASE("reductions are bit-identical across thread counts") {
  PeriodicGrid g({64, 64});
  Field f(g.num_nodes());
  for (std::int64_t i = 0; i < g.num_nodes(); ++i)
    f[i] = std::sin(0.37 * i) * std::exp(std::cos(0.11 * i));
  auto sum_with = [&](int threads) {
    Pool::instance().set_threads(threads);
    return reduce_sum(g.num_nodes(), [&](std::int64_t b, std::int64_t e) {
      double acc = 0.0;
      for (std::int64_t i = b; i < e; ++i) acc += f[i];
      return acc;
    });
  };
  const double s1 = sum_with(1);
  const double s4 = sum_with(4);
  const double s7 = sum_with(7);
  CHECK(s1 == s4);
  CHECK(s1 == s7);
  Pool::instance().set_threads(0);  // back to default
}

TEST_CASE("all_finite flags NaN and infinity") {
  Field f{1.0, 2.0, 3.0};
  CHECK(all_finite(f));
  f[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(all_finite(f));
  f[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(all_finite(f));
}

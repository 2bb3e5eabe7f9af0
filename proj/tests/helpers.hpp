#ifndef TCOORD_TESTS_HELPERS_HPP
#define TCOORD_TESTS_HELPERS_HPP

#include <random>
#include <utility>
#include <vector>

#include "tcoord/graph.hpp"

namespace tcoord_tests {

// Spanning tree over a random permutation plus extra random edges, so every
// draw is connected and shapes vary.
inline tcoord::Topology random_connected_topology(std::mt19937_64& rng,
                                                  int min_n, int max_n) {
  std::uniform_int_distribution<int> pick_n(min_n, max_n);
  const int n = pick_n(rng);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<int, int>> edges;
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    edges.emplace_back(order[parent(rng)], order[i]);
  }
  const int extra = std::uniform_int_distribution<int>(0, n)(rng);
  for (int e = 0; e < extra; ++e) {
    const int a = any(rng);
    const int b = any(rng);
    if (a != b) {
      edges.emplace_back(a, b);
    }
  }
  return tcoord::Topology::custom(n, edges);
}

// Minimizer of a unimodal scalar function on [lo, hi] via golden-section.
template <typename F>
double golden_section_min(F f, double lo, double hi, double tol = 1e-12) {
  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace tcoord_tests

#endif  // TCOORD_TESTS_HELPERS_HPP

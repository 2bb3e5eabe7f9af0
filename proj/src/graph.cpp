#include "tcoord/graph.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>

namespace tcoord {

namespace {

void require_agent_count(int n) {
  if (n < 2) {
    throw std::invalid_argument("topology needs at least 2 agents, got " +
                                std::to_string(n));
  }
}

}  // namespace

Topology Topology::complete(int n) {
  require_agent_count(n);
  Topology t;
  t.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t.edges.emplace_back(i, j);
  return t;
}

Topology Topology::path(int n) {
  require_agent_count(n);
  Topology t;
  t.n = n;
  for (int i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
  return t;
}

Topology Topology::ring(int n) {
  if (n < 3) {
    throw std::invalid_argument("ring topology needs at least 3 agents, got " +
                                std::to_string(n));
  }
  Topology t = path(n);
  t.edges.emplace_back(0, n - 1);
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

Topology Topology::custom(int n, std::span<const std::pair<int, int>> edges) {
  require_agent_count(n);
  if (edges.empty()) throw std::invalid_argument("custom topology has no edges");
  Topology t;
  t.n = n;
  t.edges.reserve(edges.size());
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") out of range for n=" +
                                  std::to_string(n));
    }
    if (i == j) {
      throw std::invalid_argument("self-loop at vertex " + std::to_string(i));
    }
    if (i > j) std::swap(i, j);
    t.edges.emplace_back(i, j);
  }
  std::sort(t.edges.begin(), t.edges.end());
  t.edges.erase(std::unique(t.edges.begin(), t.edges.end()), t.edges.end());
  return t;
}

std::vector<std::vector<int>> Topology::adjacency_lists() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

std::vector<int> Topology::degrees() const {
  std::vector<int> deg(n, 0);
  for (auto [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool Topology::connected() const {
  if (n == 0) return false;
  const auto adj = adjacency_lists();
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int count = 1;
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        frontier.push(w);
      }
    }
  }
  return count == n;
}

LaplacianMatrices laplacian_matrices(const Topology& topology) {
  const auto deg = topology.degrees();
  for (int i = 0; i < topology.n; ++i) {
    if (deg[i] == 0) {
      throw std::domain_error("vertex " + std::to_string(i) +
                              " is isolated; degree normalization undefined");
    }
  }
  LaplacianMatrices m;
  m.degree = Eigen::VectorXd::Zero(topology.n);
  for (int i = 0; i < topology.n; ++i) m.degree[i] = deg[i];
  m.combinatorial = Eigen::MatrixXd::Zero(topology.n, topology.n);
  for (auto [i, j] : topology.edges) {
    m.combinatorial(i, j) = -1.0;
    m.combinatorial(j, i) = -1.0;
  }
  m.combinatorial.diagonal() = m.degree;
  const Eigen::VectorXd inv_sqrt = m.degree.cwiseSqrt().cwiseInverse();
  m.normalized = inv_sqrt.asDiagonal() * m.combinatorial * inv_sqrt.asDiagonal();
  return m;
}

Eigen::MatrixXd SpectralDecomposition::walk_laplacian() const {
  return eigenvectors * eigenvalues.asDiagonal() * inverse;
}

SpectralDecomposition spectral_decomposition(const Topology& topology) {
  const LaplacianMatrices lap = laplacian_matrices(topology);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.normalized);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the normalized Laplacian failed");
  }

  SpectralDecomposition sd;
  sd.eigenvalues = solver.eigenvalues();
  sd.degree = lap.degree;
  if (topology.n >= 2 && sd.eigenvalues[1] <= 1e-10) {
    throw std::domain_error("graph is disconnected (lambda_2 = " +
                            std::to_string(sd.eigenvalues[1]) + ")");
  }

  // Eigenvectors of D^{-1}L via the similarity D^{-1/2} (normalized) D^{1/2}.
  const Eigen::VectorXd sqrt_deg = lap.degree.cwiseSqrt();
  Eigen::MatrixXd w = solver.eigenvectors();

  sd.eigenvectors = sqrt_deg.cwiseInverse().asDiagonal() * w;

  // Fix signs so relabelling-independent choices stay deterministic: the
  // largest-magnitude entry (first on ties) of each mapped column is
  // positive.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(topology.n);
  for (int c = 1; c < topology.n; ++c) {
    int arg = 0;
    for (int r = 1; r < topology.n; ++r) {
      if (std::abs(sd.eigenvectors(r, c)) > std::abs(sd.eigenvectors(arg, c))) {
        arg = r;
      }
    }
    if (sd.eigenvectors(arg, c) < 0.0) scale[c] = -1.0;
  }
  // Zero mode of the normalized Laplacian is proportional to D^{1/2} 1;
  // after the similarity map it becomes the ones vector. Rescale exactly.
  scale[0] = 1.0 / sd.eigenvectors(0, 0);
  sd.eigenvectors = sd.eigenvectors * scale.asDiagonal();
  sd.eigenvectors.col(0).setOnes();

  // V = D^{-1/2} W S  =>  V^{-1} = S^{-1} W^T D^{1/2}, no matrix inversion.
  sd.inverse = scale.cwiseInverse().asDiagonal() *
               (w.transpose() * sqrt_deg.asDiagonal());
  return sd;
}

std::vector<std::vector<int>> realize_links(const Topology& topology,
                                            double drop_probability,
                                            std::uint64_t seed,
                                            std::uint64_t step) {
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw std::invalid_argument("drop probability must lie in [0, 1]");
  }
  std::vector<std::vector<int>> neighbors(topology.n);
  // splitmix64-style mix keeps streams for different steps decorrelated
  // while staying reproducible for identical (seed, step) pairs.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  std::mt19937_64 rng(z ^ (z >> 31));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto [i, j] : topology.edges) {
    const double draw = unit(rng);
    if (draw < drop_probability) continue;
    neighbors[i].push_back(j);
    neighbors[j].push_back(i);
  }
  return neighbors;
}

}  // namespace tcoord

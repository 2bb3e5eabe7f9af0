#ifndef TCOORD_GRAPH_HPP
#define TCOORD_GRAPH_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tcoord {

// Undirected communication graph over agents 0..n-1.
// Edges are kept canonical: (i, j) with i < j, sorted, deduplicated.
struct Topology {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  static Topology complete(int n);
  static Topology path(int n);
  static Topology ring(int n);
  static Topology custom(int n, std::span<const std::pair<int, int>> edges);

  std::vector<std::vector<int>> adjacency_lists() const;
  std::vector<int> degrees() const;
  bool connected() const;  // BFS from vertex 0
};

struct LaplacianMatrices {
  Eigen::MatrixXd combinatorial;  // L = D - A
  Eigen::VectorXd degree;         // diagonal of D
  Eigen::MatrixXd normalized;     // D^{-1/2} L D^{-1/2}
};

// Fails if any vertex is isolated (degree normalization undefined).
LaplacianMatrices laplacian_matrices(const Topology& topology);

// Eigenstructure of the random-walk Laplacian D^{-1} L, obtained from the
// symmetric normalized Laplacian (same spectrum by similarity). Eigenvalues
// ascend; the zero-mode eigenvector column is rescaled to all-ones and the
// remaining columns have their largest-magnitude entry positive.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // lambda_1 = 0 <= ... <= lambda_n <= 2
  Eigen::MatrixXd eigenvectors;  // V, column 0 == ones
  Eigen::MatrixXd inverse;       // V^{-1}, exact via the orthogonal factor
  Eigen::VectorXd degree;

  int n() const { return static_cast<int>(eigenvalues.size()); }
  Eigen::MatrixXd walk_laplacian() const;  // D^{-1} L, reconstructed
};

// Requires a connected graph; rejects lambda_2 <= 1e-10.
SpectralDecomposition spectral_decomposition(const Topology& topology);

// Per-step neighbor sets after independent Bernoulli link failures.
// Deterministic in (seed, step): repeated calls with the same arguments
// return the same sets. drop_probability 0 keeps every edge, 1 drops all.
std::vector<std::vector<int>> realize_links(const Topology& topology,
                                            double drop_probability,
                                            std::uint64_t seed,
                                            std::uint64_t step);

}  // namespace tcoord

#endif  // TCOORD_GRAPH_HPP

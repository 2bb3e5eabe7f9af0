#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tcoord/graph.hpp"

using tcoord::Topology;

TEST_CASE("generated topologies have the expected shape") {
  const Topology k3 = Topology::complete(3);
  CHECK(k3.edges.size() == 3);

  const Topology p3 = Topology::path(3);
  REQUIRE(p3.edges.size() == 2);
  CHECK(p3.edges[0] == std::pair<int, int>(0, 1));
  CHECK(p3.edges[1] == std::pair<int, int>(1, 2));

  const Topology r5 = Topology::ring(5);
  CHECK(r5.edges.size() == 5);
  for (const int d : r5.degrees()) {
    CHECK(d == 2);
  }
}

TEST_CASE("custom topologies are canonicalized and validated") {
  const std::vector<std::pair<int, int>> messy = {{2, 0}, {0, 2}, {1, 0}};
  const Topology t = Topology::custom(3, messy);
  REQUIRE(t.edges.size() == 2);
  CHECK(t.edges[0] == std::pair<int, int>(0, 1));
  CHECK(t.edges[1] == std::pair<int, int>(0, 2));

  CHECK_THROWS(Topology::custom(3, std::vector<std::pair<int, int>>{}));
  CHECK_THROWS(
      Topology::custom(3, std::vector<std::pair<int, int>>{{0, 3}}));
  CHECK_THROWS(
      Topology::custom(3, std::vector<std::pair<int, int>>{{1, 1}}));
  CHECK_THROWS(Topology::complete(1));
  CHECK_THROWS(Topology::ring(2));
}

TEST_CASE("laplacian matrices match hand computations") {
  const auto p3 = tcoord::laplacian_matrices(Topology::path(3));
  CHECK(p3.degree(0) == 1.0);
  CHECK(p3.degree(1) == 2.0);
  CHECK(p3.degree(2) == 1.0);
  for (int r = 0; r < 3; ++r) {
    CHECK(p3.combinatorial.row(r).sum() == 0.0);
  }

  const auto k4 = tcoord::laplacian_matrices(Topology::complete(4));
  const Eigen::MatrixXd expected =
      4.0 * Eigen::MatrixXd::Identity(4, 4) - Eigen::MatrixXd::Ones(4, 4);
  CHECK((k4.combinatorial - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k4.degree.isConstant(3.0));

  const auto k2 = tcoord::laplacian_matrices(Topology::complete(2));
  Eigen::MatrixXd norm(2, 2);
  norm << 1.0, -1.0, -1.0, 1.0;
  CHECK((k2.normalized - norm).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((k2.normalized - k2.normalized.transpose()).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("isolated vertices are rejected by name") {
  const Topology t =
      Topology::custom(3, std::vector<std::pair<int, int>>{{0, 1}});
  try {
    tcoord::laplacian_matrices(t);
    FAIL("expected a throw");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("spectral decompositions of known graphs") {
  const auto p3 = tcoord::spectral_decomposition(Topology::path(3));
  CHECK(p3.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(p3.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(p3.eigenvalues(2) == doctest::Approx(2.0).epsilon(1e-10));

  const auto k4 = tcoord::spectral_decomposition(Topology::complete(4));
  for (int i = 1; i < 4; ++i) {
    CHECK(k4.eigenvalues(i) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  }

  const auto k2 = tcoord::spectral_decomposition(Topology::complete(2));
  CHECK(k2.eigenvalues(1) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("disconnected graphs are rejected, and BFS agrees") {
  const Topology split =
      Topology::custom(4, std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  CHECK_FALSE(split.connected());
  CHECK_THROWS(tcoord::spectral_decomposition(split));
  CHECK(Topology::path(4).connected());
}

TEST_CASE("random connected graphs: spectrum and reconstruction") {
  std::mt19937_64 rng(20240901);
  for (int trial = 0; trial < 60; ++trial) {
    const Topology t = tcoord_tests::random_connected_topology(rng, 2, 15);
    CAPTURE(trial);
    REQUIRE(t.connected());
    const auto sd = tcoord::spectral_decomposition(t);
    CHECK(std::abs(sd.eigenvalues(0)) <= 1e-10);
    CHECK(sd.eigenvalues(t.n - 1) <= 2.0 + 1e-10);
    CHECK(sd.eigenvalues(1) > 1e-10);

    CHECK((sd.eigenvectors.col(0) - Eigen::VectorXd::Ones(t.n))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    const Eigen::MatrixXd reconstructed = sd.eigenvectors *
                                          sd.eigenvalues.asDiagonal() *
                                          sd.inverse;
    const auto lm = tcoord::laplacian_matrices(t);
    const Eigen::MatrixXd walk =
        lm.degree.cwiseInverse().asDiagonal() * lm.combinatorial;
    CHECK((reconstructed - walk).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((sd.eigenvectors * sd.inverse -
           Eigen::MatrixXd::Identity(t.n, t.n))
              .cwiseAbs()
              .maxCoeff() <= 1e-9);
    CHECK((sd.walk_laplacian() - walk).cwiseAbs().maxCoeff() <= 1e-9);

    // Sign convention: the largest-magnitude entry of every non-zero-mode
    // column is positive.
    for (int j = 1; j < t.n; ++j) {
      int arg = 0;
      sd.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(sd.eigenvectors(arg, j) > 0.0);
    }
  }
}

TEST_CASE("bipartite connected graphs reach the spectral ceiling") {
  for (const Topology& t : {Topology::path(5), Topology::path(8),
                            Topology::ring(6), Topology::ring(10)}) {
    const auto sd = tcoord::spectral_decomposition(t);
    CHECK(sd.eigenvalues(t.n - 1) == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("eigenvalues are invariant under vertex relabeling") {
  std::mt19937_64 rng(77001);
  for (int trial = 0; trial < 20; ++trial) {
    const Topology t = tcoord_tests::random_connected_topology(rng, 3, 12);
    std::vector<int> relabel(t.n);
    for (int i = 0; i < t.n; ++i) relabel[i] = i;
    std::shuffle(relabel.begin(), relabel.end(), rng);
    std::vector<std::pair<int, int>> mapped;
    for (const auto& [a, b] : t.edges) {
      mapped.emplace_back(relabel[a], relabel[b]);
    }
    const auto original = tcoord::spectral_decomposition(t);
    const auto permuted =
        tcoord::spectral_decomposition(Topology::custom(t.n, mapped));
    CHECK((original.eigenvalues - permuted.eigenvalues).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("link realization endpoints and determinism") {
  const Topology t = Topology::complete(5);
  const auto all = tcoord::realize_links(t, 0.0, 99, 3);
  for (int i = 0; i < 5; ++i) {
    CHECK(all[i].size() == 4);
  }
  const auto none = tcoord::realize_links(t, 1.0, 99, 3);
  for (int i = 0; i < 5; ++i) {
    CHECK(none[i].empty());
  }
  const auto a = tcoord::realize_links(t, 0.5, 1234, 7);
  const auto b = tcoord::realize_links(t, 0.5, 1234, 7);
  CHECK(a == b);

  // Symmetric sets, and different rounds see different realizations.
  bool any_difference = false;
  for (std::uint64_t step = 0; step < 16; ++step) {
    const auto links = tcoord::realize_links(t, 0.5, 1234, step);
    for (int i = 0; i < 5; ++i) {
      for (const int j : links[i]) {
        CHECK(std::find(links[j].begin(), links[j].end(), i) !=
              links[j].end());
      }
    }
    any_difference = any_difference || links != a;
  }
  CHECK(any_difference);
  CHECK_THROWS(tcoord::realize_links(t, 1.5, 0, 0));
}

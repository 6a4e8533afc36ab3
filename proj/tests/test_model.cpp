#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "slsloc/model.hpp"
#include "slsloc/sls_operators.hpp"

#include <random>

using namespace slsloc;

namespace {

// Boolean reachability within d hops through the blockwise (A, B) support,
// used as an independent oracle for the BFS neighborhoods.
std::vector<std::vector<bool>> boolean_power_reach(const InterconnectionGraph& g, int d) {
  std::vector<std::vector<bool>> reach(g.n, std::vector<bool>(g.n, false));
  for (int i = 0; i < g.n; ++i) reach[i][i] = true;
  for (int step = 0; step < d; ++step) {
    auto next = reach;
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        if (reach[i][j])
          for (int w : g.neighbors[j]) next[i][w] = true;
    reach = std::move(next);
  }
  return reach;
}

}  // namespace

TEST_CASE("interconnection graph of the chain example") {
  const auto g = build_interconnection_graph(testing::chain3_system());
  CHECK(g.n == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK(g.is_connected());
  CHECK(g.diameter() == 2);
}

TEST_CASE("graph edge cases: decoupled and dense systems") {
  LtiNetworkSystem sys;
  sys.A = Mat::Identity(3, 3);
  sys.B = Mat::Identity(3, 3);
  sys.partition = {{0, 1, 2}, {0, 1, 2}, 3};
  CHECK(build_interconnection_graph(sys).num_edges() == 0);

  sys.A = Mat::Ones(3, 3);
  CHECK(build_interconnection_graph(sys).num_edges() == 3);  // complete on 3 vertices
}

TEST_CASE("B coupling induces edges") {
  LtiNetworkSystem sys;
  sys.A = Mat::Identity(2, 2);
  sys.B = Mat::Zero(2, 1);
  sys.B(0, 0) = 1.0;          // input owned by subsystem 1 drives state of subsystem 0
  sys.partition = {{0, 1}, {1}, 2};
  const auto g = build_interconnection_graph(sys);
  CHECK(g.has_edge(0, 1));
}

TEST_CASE("d-local neighborhoods") {
  const auto g = build_interconnection_graph(testing::chain3_system());
  CHECK(d_local_neighborhood(g, 1, 0) == std::vector<int>{1});
  CHECK(d_local_neighborhood(g, 1, 1) == std::vector<int>{0, 1, 2});
  CHECK(d_local_neighborhood(g, 0, 1) == std::vector<int>{0, 1});
  CHECK(d_local_neighborhood(g, 0, 5) == std::vector<int>{0, 1, 2});  // beyond diameter
}

TEST_CASE("BFS neighborhoods match boolean powers on random graphs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sys = testing::random_network_system(seed, 3 + static_cast<int>(seed % 5));
    const auto g = build_interconnection_graph(sys);
    const int diam = g.diameter();
    for (int d = 0; d <= diam; ++d) {
      const auto reach = boolean_power_reach(g, d);
      for (int i = 0; i < g.n; ++i) {
        std::vector<int> expected;
        for (int j = 0; j < g.n; ++j)
          if (reach[i][j]) expected.push_back(j);
        CHECK(d_local_neighborhood(g, i, d) == expected);
      }
    }
  }
}

TEST_CASE("sparsity pattern reproduces the chain example") {
  const auto sys = testing::chain3_system();
  const auto p = build_sparsity_pattern(sys, 1, 1);
  REQUIRE(p.n_phi() == 8);
  REQUIRE(p.mask.cols() == 3);

  const bool expected[8][3] = {
      {true, true, false}, {true, true, true},  {false, true, true},
      {true, true, false}, {true, true, true},  {false, true, true},
      {true, true, false}, {false, true, true},
  };
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 3; ++c) CHECK(p.mask(r, c) == expected[r][c]);
}

TEST_CASE("pattern saturates at the diameter and shrinks to blocks on edgeless graphs") {
  const auto sys = testing::chain3_system();
  const auto full = build_sparsity_pattern(sys, 2, 2);  // diameter = 2
  CHECK(full.mask.all());

  LtiNetworkSystem decoupled;
  decoupled.A = Mat::Identity(2, 2);
  decoupled.B = Mat::Identity(2, 2);
  decoupled.partition = {{0, 1}, {0, 1}, 2};
  const auto diag = build_sparsity_pattern(decoupled, 3, 1);
  for (Index r = 0; r < diag.n_phi(); ++r)
    for (Index c = 0; c < 2; ++c) CHECK(diag.mask(r, c) == ((r % 2) == (c % 2)));
}

TEST_CASE("index sets reproduce the chain example") {
  const auto sys = testing::chain3_system();
  const auto idx = index_sets(build_sparsity_pattern(sys, 1, 1));

  IndexList support_1based, constrained_1based;
  for (Index m : idx.support) support_1based.push_back(m + 1);
  for (Index m : idx.constrained) constrained_1based.push_back(m + 1);

  const IndexList expected_support = {1, 2, 4,  5,  7,  9,  10, 11, 12, 13,
                                      14, 15, 16, 18, 19, 21, 22, 24};
  const IndexList expected_constrained = {3, 5, 11, 14};
  CHECK(support_1based == expected_support);
  CHECK(constrained_1based == expected_constrained);
}

TEST_CASE("index sets of the full mask") {
  const auto sys = testing::chain3_system();
  const auto idx = index_sets(full_sparsity_pattern(sys, 1));
  CHECK(idx.constrained.empty());
  CHECK(static_cast<Index>(idx.support.size()) == idx.n_phi * idx.n_x);
}

TEST_CASE("support/constrained counting identity") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sys = testing::random_network_system(seed, 4);
    for (int d : {0, 1, 2}) {
      const auto p = build_sparsity_pattern(sys, d, 2);
      const auto idx = index_sets(p);
      // disallowed entries of the leading identity block close the count
      Index disallowed_first_block = 0;
      for (Index r = 0; r < idx.n_x; ++r)
        for (Index c = 0; c < idx.n_x; ++c)
          if (!p.mask(r, c)) ++disallowed_first_block;
      CHECK(static_cast<Index>(idx.support.size() + idx.constrained.size()) +
                disallowed_first_block ==
            idx.n_phi * idx.n_x);
    }
  }
}

TEST_CASE("pattern monotonicity in d") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto sys = testing::random_network_system(seed, 5);
    const auto g = build_interconnection_graph(sys);
    for (int d = 0; d < g.diameter(); ++d) {
      const auto p1 = build_sparsity_pattern(sys, d, 2);
      const auto p2 = build_sparsity_pattern(sys, d + 1, 2);
      CHECK((p1.mask && !p2.mask).count() == 0);  // mask(d) <= mask(d+1)
      const auto i1 = index_sets(p1);
      const auto i2 = index_sets(p2);
      CHECK(std::includes(i1.constrained.begin(), i1.constrained.end(), i2.constrained.begin(),
                          i2.constrained.end()));
    }
  }
}

TEST_CASE("vectorization convention: Lambda x0 == X vec(Lambda)") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n_phi = 7, n_x = 4;
    const Mat lambda = testing::random_matrix(rng, n_phi, n_x);
    const Vec x0 = testing::random_vector(rng, n_x);
    Vec vec_lambda(n_phi * n_x);
    for (Index c = 0; c < n_x; ++c) vec_lambda.segment(c * n_phi, n_phi) = lambda.col(c);
    const Mat X = build_augmented_state(x0, n_phi);
    CHECK((lambda * x0 - X * vec_lambda).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("arbitrary communication sets are representable") {
  const auto sys = testing::chain3_system();
  // node 0 may reach everyone, others only themselves
  const auto p = sparsity_pattern_from_neighbor_sets(sys, {{0, 1, 2}, {1}, {2}}, 1);
  CHECK(p.mask(0, 1));
  CHECK(p.mask(0, 2));
  CHECK_FALSE(p.mask(1, 0));
  CHECK_THROWS_AS(sparsity_pattern_from_neighbor_sets(sys, {{1}, {1}, {2}}, 1),
                  std::invalid_argument);
}

TEST_CASE("system validation rejects malformed inputs") {
  LtiNetworkSystem sys = testing::chain3_system();
  sys.partition.state_owner = {0, 0, 0};  // subsystems 1,2 own nothing
  CHECK_THROWS_AS(validate_system(sys), std::invalid_argument);

  sys = testing::chain3_system();
  sys.A(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_system(sys), std::invalid_argument);
}

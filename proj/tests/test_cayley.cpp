#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "clab/cayley.hpp"
#include "clab/presets.hpp"
#include "oracles.hpp"

using namespace clab;

namespace {

QuotientTable cyclic(std::uint32_t m) {
  std::vector<std::uint32_t> plus(m);
  for (std::uint32_t i = 0; i < m; ++i) plus[i] = (i + 1) % m;
  return QuotientTable::from_permutations({plus});
}

using Edges = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

Edges complete(std::uint32_t n) {
  Edges e;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

std::vector<std::pair<int, int>> as_int(const Edges& e) {
  std::vector<std::pair<int, int>> out;
  for (auto [u, v] : e) out.push_back({static_cast<int>(u), static_cast<int>(v)});
  return out;
}

}  // namespace

TEST(Cayley, CycleSpectrumMatchesClosedForm) {
  for (std::uint32_t m : {5u, 8u, 12u, 31u}) {
    const CayleyGraph g = build_cayley(cyclic(m));
    EXPECT_TRUE(g.regular);
    EXPECT_DOUBLE_EQ(g.degree, 2.0);
    const SpectralReport s = spectrum(g);
    const auto expect = oracle::cycle_spectrum(m);
    ASSERT_EQ(s.eigenvalues.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(s.eigenvalues[i], expect[i], 1e-9);
    EXPECT_EQ(s.perron_multiplicity, 1u);
    EXPECT_NEAR(s.lambda2, 2 * std::cos(2 * M_PI / m), 1e-9);
  }
}

TEST(Cayley, CompleteGraphSpectrumAndMultiplicity) {
  const CayleyGraph g = graph_from_edges(7, complete(7));
  const SpectralReport s = spectrum(g);
  EXPECT_NEAR(s.eigenvalues.front(), 6.0, 1e-9);
  ASSERT_EQ(s.clusters.size(), 2u);
  EXPECT_NEAR(s.clusters[1].value, -1.0, 1e-9);
  EXPECT_EQ(s.clusters[1].multiplicity, 6u);
  EXPECT_EQ(s.min_nontrivial_multiplicity, 6u);
  EXPECT_NEAR(s.normalized_gap, 1.0 + 1.0 / 6.0, 1e-9);
}

TEST(Cayley, ExactExpansionMatchesEnumeration) {
  EXPECT_DOUBLE_EQ(expansion_bounds(graph_from_edges(4, complete(4))).lower, 3.0);
  Edges c6;
  for (std::uint32_t i = 0; i < 6; ++i) c6.push_back({i, (i + 1) % 6});
  EXPECT_DOUBLE_EQ(expansion_bounds(graph_from_edges(6, c6)).lower, 1.0);
  const Edges two = {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 6}, {6, 3}};
  EXPECT_DOUBLE_EQ(expansion_bounds(graph_from_edges(7, two)).upper, 0.0);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t n = 6 + rng() % 8;
    Edges e;
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (rng() % 3 == 0) e.push_back({i, j});
    const ExpansionBounds b = expansion_bounds(graph_from_edges(n, e));
    EXPECT_EQ(b.method, ExpansionMethod::kExact);
    EXPECT_NEAR(b.lower, oracle::expansion_bruteforce(n, as_int(e)), 1e-12);
    EXPECT_DOUBLE_EQ(b.lower, b.upper);
  }
}

TEST(Cayley, InclusiveConventionKeepsInternalNeighbours) {
  // On C6, W = {0, 2} reaches {1, 3, 5}; with W = {0, 1} the pair itself
  // would count.
  Edges c6;
  for (std::uint32_t i = 0; i < 6; ++i) c6.push_back({i, (i + 1) % 6});
  const ExpansionBounds b = expansion_bounds(graph_from_edges(6, c6), NeighborConvention::kInclusive);
  EXPECT_DOUBLE_EQ(b.lower, 1.5);
}

TEST(Cayley, SpectralBoundsSandwichTheTruth) {
  const Preset t = thin_preset(1);
  const QuotientTable q = enumerate_quotient(t.form, t.generators, make_residue_ring(FieldSpec::rational(), 5, 1));
  const CayleyGraph g = build_cayley(q);
  EXPECT_EQ(g.vertices, 60u);
  EXPECT_EQ(connected_components(g), 1u);
  const ExpansionBounds b = expansion_bounds(g, NeighborConvention::kExclusive, true);
  EXPECT_EQ(b.method, ExpansionMethod::kCheeger);
  EXPECT_GT(b.lower, 0.0);
  EXPECT_LE(b.lower, b.upper);
}

TEST(Cayley, WindowedAgreesWithFull) {
  const Preset a = arithmetic_preset(2);
  const QuotientTable q = enumerate_quotient(a.form, a.generators, make_residue_ring(FieldSpec::rational(), 3, 1));
  const CayleyGraph g = build_cayley(q);
  const SpectralReport full = spectrum(g);
  SpectrumOptions w;
  w.mode = SpectrumMode::kWindowed;
  w.window = 6;
  const SpectralReport win = spectrum(g, w);
  EXPECT_TRUE(win.converged);
  EXPECT_LE(win.max_residual, 1e-6);
  EXPECT_NEAR(win.lambda2, full.lambda2, 1e-6);
  EXPECT_NEAR(win.lambda_min, full.lambda_min, 1e-6);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(win.eigenvalues[i], full.eigenvalues[i], 1e-6);
}

TEST(Cayley, ClusteringAndEdgeList) {
  const auto c = cluster_eigenvalues({3.0, 1.0 + 1e-9, 1.0, -1.0}, 1e-6);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].multiplicity, 2u);
  std::ostringstream os;
  write_edge_list(build_cayley(cyclic(4)), os);
  EXPECT_EQ(os.str(), "0 1\n0 3\n1 2\n2 3\n");
}

TEST(Cayley, MultiplicityFloorNeedsThreeLevels) {
  std::vector<MultiplicityLevel> two(2);
  EXPECT_THROW(multiplicity_floor_report(two), Error);
}

TEST(ExpanderFamily, ThinGroupHasUniformGap) {
  const Preset t = thin_preset(1);
  const auto rep = expander_family_report(t.form, t.generators, {3, 5, 7, 11, 13});
  ASSERT_EQ(rep.rows.size(), 5u);
  for (const auto& r : rep.rows) EXPECT_TRUE(r.ok) << r.prime;
  EXPECT_GT(rep.min_gap, 0.05);
}

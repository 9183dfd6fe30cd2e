#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "clab/presets.hpp"
#include "clab/quotient.hpp"
#include "oracles.hpp"

using namespace clab;

namespace {

oracle::Mat to_oracle(const ResidueMatrix& m) {
  oracle::Mat out;
  for (const auto& x : m.data()) out.push_back(x.a);
  return out;
}

ResidueRing field_mod(std::int64_t p, int e = 1) { return make_residue_ring(FieldSpec::rational(), p, e); }

}  // namespace

TEST(Quotient, ThinGroupReachesTheDerivedSubgroup) {
  const Preset t = thin_preset(1);
  for (std::int64_t p : {3, 5, 7}) {
    const std::vector<std::int64_t> diag = {1, 1, p - 1};
    const auto derived = oracle::derived_subgroup(oracle::special_orthogonal_3(diag, p), diag, p);
    const QuotientTable q = enumerate_quotient(t.form, t.generators, field_mod(p));
    ASSERT_TRUE(q.closed());
    ASSERT_EQ(q.size(), derived.size());
    std::set<oracle::Mat> got;
    for (std::size_t i = 0; i < q.size(); ++i) got.insert(to_oracle(q.element(i)));
    EXPECT_EQ(got, derived) << p;
    // The same set from the oracle closure of the reduced generators.
    std::vector<oracle::Mat> gens;
    for (const auto& g : q.generators()) gens.push_back(to_oracle(g));
    EXPECT_EQ(oracle::closure(gens, 3, p), derived);
  }
}

TEST(Quotient, EdgesAreConsistent) {
  const Preset a = arithmetic_preset(2);
  const ResidueRing k = field_mod(5);
  const QuotientTable q = enumerate_quotient(a.form, a.generators, k);
  ASSERT_TRUE(q.closed());
  ASSERT_TRUE(q.has_edges());
  EXPECT_EQ(q.element(0), identity(k, 4));
  for (std::size_t id = 0; id < q.size(); id += 37)
    for (std::size_t g = 0; g < q.generator_count(); ++g) {
      const std::uint32_t to = q.edge(id, g);
      EXPECT_EQ(q.element(to), multiply(k, q.element(id), q.generators()[g]));
      EXPECT_EQ(q.inverse_edge(to, g), id);
      EXPECT_EQ(q.find(q.element(to)), std::optional<std::uint32_t>(to));
    }
}

TEST(Quotient, SerializationRoundTripIsByteStable) {
  const Preset t = thin_preset(2);
  const QuotientTable q = enumerate_quotient(t.form, t.generators, field_mod(5));
  std::stringstream a;
  q.serialize(a);
  const QuotientTable r = QuotientTable::deserialize(a);
  EXPECT_EQ(r.size(), q.size());
  for (std::size_t i = 0; i < q.size(); ++i) ASSERT_EQ(r.element(i), q.element(i));
  for (std::size_t g = 0; g < q.generator_count(); ++g) EXPECT_EQ(r.edge(7, g), q.edge(7, g));
  std::stringstream b;
  r.serialize(b);
  EXPECT_EQ(a.str(), b.str());
  std::stringstream bad("not a table");
  EXPECT_THROW(QuotientTable::deserialize(bad), Error);
}

TEST(Quotient, BudgetGivesPartialTable) {
  const Preset a = arithmetic_preset(2);
  EnumerateOptions opt;
  opt.element_budget = 100;
  const QuotientTable q = enumerate_quotient(a.form, a.generators, field_mod(7), opt);
  EXPECT_FALSE(q.closed());
  EXPECT_FALSE(q.has_edges());
  EXPECT_LE(q.size(), 100u);
}

TEST(Quotient, RejectsNonOrthogonalGenerators) {
  const Preset a = arithmetic_preset(1);
  std::vector<ExactMatrix> gens = a.generators;
  gens[0](0, 0).a += 1;
  EXPECT_THROW(enumerate_quotient(a.form, gens, field_mod(5)), Error);
}

TEST(StrongApproximation, ArithmeticGroupIsSurjective) {
  const Preset a = arithmetic_preset(2);
  for (std::int64_t p : {3, 5}) {
    const auto rep = verify_strong_approximation(a.form, a.generators, field_mod(p));
    EXPECT_TRUE(rep.closed);
    EXPECT_TRUE(rep.surjective_onto_spinor_kernel) << p;
    EXPECT_EQ(rep.reached_kernel, rep.target);
    EXPECT_EQ(rep.reached, rep.reached_kernel * rep.spinor_image.size());
    EXPECT_GT(rep.spinor_checks, 0u);
  }
  // |SO(3,1)(F_3)| = 9 * 10 * 8, kernel of index two.
  const auto r3 = verify_strong_approximation(a.form, a.generators, field_mod(3));
  EXPECT_EQ(r3.ambient, BigInt(720));
  EXPECT_EQ(r3.target, BigInt(360));
}

TEST(StrongApproximation, ReducibleGroupIsNot) {
  const Preset r = reducible_preset();
  for (std::int64_t p : {3, 5, 7}) {
    const auto rep = verify_strong_approximation(r.form, r.generators, field_mod(p));
    EXPECT_TRUE(rep.closed);
    EXPECT_FALSE(rep.surjective_onto_spinor_kernel) << p;
    EXPECT_GT(rep.index_defect, BigInt(1));
  }
}

TEST(StrongApproximation, InertLevelOfGoldenGroup) {
  const Preset g = golden_preset();
  const auto rep = verify_strong_approximation(g.form, g.generators, make_residue_ring(g.form.field(), 3, 1));
  EXPECT_TRUE(rep.closed);
  // SO over F_9 of a 4-dimensional form: 81 (81 -+ 1)(81 - 1).
  EXPECT_TRUE(rep.ambient == BigInt(81 * 82 * 80) || rep.ambient == BigInt(81 * 80 * 80));
  EXPECT_EQ(rep.reached, BigInt(192));
}

TEST(OrderScaling, LadderRatioAtThree) {
  const Preset a = arithmetic_preset(2);
  const auto rep = order_scaling_report(a.form, a.generators, {{3, 1}, {3, 2}});
  ASSERT_EQ(rep.ladders.size(), 1u);
  EXPECT_TRUE(rep.ladders[0].exact_division);
  EXPECT_EQ(rep.ladders[0].ratio, BigInt(729));  // 3^{dim SO(3,1)}
}

TEST(OrderScaling, FitOverSuppliedRows) {
  std::vector<LevelRow> rows;
  for (std::int64_t p : {3, 5, 7, 11}) {
    LevelRow r;
    r.prime = p;
    r.ring_size = p;
    r.order = BigInt(p) * p * p * (p * p - 1) / 2;
    r.closed = true;
    rows.push_back(r);
  }
  const auto rep = summarize_orders(rows);
  EXPECT_EQ(rep.fitted_points, 4u);
  EXPECT_NEAR(rep.exponent, 5.0, 0.3);
}

TEST(Crt, ProductOfLevelsThreeAndFive) {
  const Preset a = arithmetic_preset(1);
  const CrtCheck c = crt_product_check(a.form, a.generators, 3, 5);
  EXPECT_FALSE(c.skipped);
  EXPECT_TRUE(c.holds);
  EXPECT_EQ(c.kernel12, c.kernel1 * c.kernel2);
  const Preset g = golden_preset();
  const CrtCheck mixed = crt_product_check(g.form, g.generators, 3, 11);
  EXPECT_TRUE(mixed.skipped);
  EXPECT_FALSE(mixed.diagnostic.empty());
}

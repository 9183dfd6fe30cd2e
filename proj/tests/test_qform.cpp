#include <gtest/gtest.h>

#include <random>

#include "clab/presets.hpp"
#include "clab/qform.hpp"
#include "oracles.hpp"

using namespace clab;

namespace {

ExactMatrix int_matrix(std::size_t n, std::initializer_list<long> v) {
  std::vector<RingElement> d;
  for (long x : v) d.push_back({BigInt(x), BigInt(0)});
  return ExactMatrix(n, d);
}

ResidueMatrix from_oracle(const oracle::Mat& m, std::size_t n) {
  std::vector<Residue> d;
  for (auto x : m) d.push_back({static_cast<std::uint32_t>(x), 0});
  return ResidueMatrix(n, d);
}

std::vector<std::int64_t> diag_mod(std::size_t dim, std::int64_t p) {
  std::vector<std::int64_t> g(dim, 1);
  g.back() = p - 1;
  return g;
}

}  // namespace

TEST(QuadraticForm, RejectsInvalidGramMatrices) {
  EXPECT_THROW(QuadraticForm(FieldSpec::rational(), int_matrix(3, {1, 1, 0, 0, 1, 0, 0, 0, -1})), Error);
  EXPECT_THROW(QuadraticForm(FieldSpec::rational(), int_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 0})), Error);
  EXPECT_THROW(QuadraticForm(FieldSpec::rational(), int_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 1})), Error);
  EXPECT_THROW(QuadraticForm(FieldSpec::rational(), int_matrix(3, {1, 0, 0, 0, -1, 0, 0, 0, -1})), Error);
  EXPECT_NO_THROW(QuadraticForm(FieldSpec::rational(), int_matrix(3, {1, 0, 0, 0, 1, 0, 0, 0, -1})));
  // Over Q(sqrt 5) the conjugate place must be definite: -sqrt5 -> +sqrt5.
  EXPECT_NO_THROW(builtin_form(2, 5));
}

TEST(Reflections, AreOrthogonalInvolutionsOfDeterminantMinusOne) {
  for (int n : {1, 2, 3}) {
    const QuadraticForm form = builtin_form(n);
    const ExactRing ring(form.field());
    for (const auto& r : diagonal_roots(n)) {
      const ExactMatrix t = reflect(ring, std::span<const RingElement>(r), form.gram());
      EXPECT_TRUE(is_orthogonal(ring, t, form.gram()));
      EXPECT_EQ(determinant(ring, t), ring.from_int(-1));
      EXPECT_EQ(multiply(ring, t, t), identity(ring, form.dim()));
    }
  }
}

TEST(Presets, GeneratorsAreSpecialOrthogonal) {
  for (const auto& name : preset_names()) {
    const Preset p = preset_by_name(name);
    const ExactRing ring(p.form.field());
    ASSERT_FALSE(p.generators.empty()) << name;
    for (const auto& g : p.generators) EXPECT_TRUE(is_special_orthogonal(ring, g, p.form.gram())) << name;
  }
}

TEST(CartanDieudonne, RecomposesRandomGroupElements) {
  for (std::int64_t p : {3, 5, 7}) {
    const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
    const QuadraticForm form = builtin_form(1);
    const ResidueMatrix gram = form.gram_mod(k);
    const auto group = oracle::special_orthogonal_3(diag_mod(3, p), p);
    ASSERT_EQ(group.size(), static_cast<std::size_t>(p * (p * p - 1)));
    for (const auto& m : group) {
      const ResidueMatrix mm = from_oracle(m, 3);
      const auto ws = cartan_dieudonne(k, mm, gram);
      EXPECT_LE(ws.size(), 3u);
      ResidueMatrix prod = identity(k, 3);
      for (const auto& w : ws) prod = multiply(k, prod, reflect(k, std::span<const Residue>(w), gram));
      EXPECT_EQ(prod, mm);
    }
  }
}

TEST(CartanDieudonne, FourDimensionalAndInertCases) {
  std::mt19937_64 rng(3);
  const QuadraticForm form = builtin_form(2);
  const ResidueRing k = make_residue_ring(FieldSpec::rational(), 5, 1);
  const ResidueMatrix gram = form.gram_mod(k);
  const auto group = oracle::special_orthogonal(diag_mod(4, 5), 5);
  for (int i = 0; i < 300; ++i) {
    const ResidueMatrix mm = from_oracle(group[rng() % group.size()], 4);
    ResidueMatrix prod = identity(k, 4);
    for (const auto& w : cartan_dieudonne(k, mm, gram))
      prod = multiply(k, prod, reflect(k, std::span<const Residue>(w), gram));
    EXPECT_EQ(prod, mm);
  }
  // Over F_9 (golden field at 3), words in the preset generators.
  const Preset g = golden_preset();
  const ResidueRing f9 = make_residue_ring(g.form.field(), 3, 1);
  const ResidueMatrix gram9 = g.form.gram_mod(f9);
  ResidueMatrix m = identity(f9, 4);
  for (int i = 0; i < 40; ++i) {
    m = multiply(f9, m, reduce_matrix(f9, g.generators[rng() % g.generators.size()]));
    ResidueMatrix prod = identity(f9, 4);
    for (const auto& w : cartan_dieudonne(f9, m, gram9))
      prod = multiply(f9, prod, reflect(f9, std::span<const Residue>(w), gram9));
    EXPECT_EQ(prod, m);
  }
}

TEST(SpinorNorm, KernelIsTheDerivedSubgroup) {
  for (std::int64_t p : {3, 5, 7}) {
    const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
    const ResidueMatrix gram = builtin_form(1).gram_mod(k);
    const auto diag = diag_mod(3, p);
    const auto group = oracle::special_orthogonal_3(diag, p);
    const auto derived = oracle::derived_subgroup(group, diag, p);
    EXPECT_EQ(derived.size() * 2, group.size());
    for (const auto& m : group) {
      const bool in_kernel = spinor_class(k, from_oracle(m, 3), gram) == 0;
      EXPECT_EQ(in_kernel, derived.count(m) > 0);
    }
  }
}

TEST(SpinorNorm, IsMultiplicative) {
  std::mt19937_64 rng(5);
  const std::int64_t p = 7;
  const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
  const ResidueMatrix gram = builtin_form(2).gram_mod(k);
  const auto group = oracle::special_orthogonal(diag_mod(4, p), p);
  for (int i = 0; i < 500; ++i) {
    const auto& a = group[rng() % group.size()];
    const auto& b = group[rng() % group.size()];
    const auto ca = spinor_class(k, from_oracle(a, 4), gram);
    const auto cb = spinor_class(k, from_oracle(b, 4), gram);
    EXPECT_EQ(spinor_class(k, from_oracle(oracle::mul(a, b, 4, p), 4), gram), ca ^ cb);
  }
}

TEST(SpinorNorm, PrimePowerAndCrtClasses) {
  const Preset a = arithmetic_preset(1);
  const ExactRing ring(a.form.field());
  const ResidueRing r9 = make_residue_ring(FieldSpec::rational(), 3, 2);
  const ResidueRing r3 = r9.residue_field();
  const ResidueRing r15 = crt_product(r3, make_residue_ring(FieldSpec::rational(), 5, 1));
  for (const auto& g : a.generators) {
    const ResidueMatrix m9 = reduce_matrix(r9, g);
    EXPECT_EQ(spinor_norm_prime_power(r9, m9, a.form.gram_mod(r9)),
              spinor_norm(r3, reduce_matrix(r3, g), a.form.gram_mod(r3)));
    const std::uint32_t bits = spinor_class(r15, reduce_matrix(r15, g), a.form.gram_mod(r15));
    const ResidueRing r5 = r15.factor_ring(1, 1);
    EXPECT_EQ(bits & 1u, spinor_class(r3, reduce_matrix(r3, g), a.form.gram_mod(r3)));
    EXPECT_EQ(bits >> 1 & 1u, spinor_class(r5, reduce_matrix(r5, g), a.form.gram_mod(r5)));
  }
}

TEST(GroupOrders, MatchEnumeration) {
  for (std::int64_t p : {3, 5, 7}) {
    const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
    const auto so3 = oracle::special_orthogonal_3(diag_mod(3, p), p);
    EXPECT_EQ(special_orthogonal_order(builtin_form(1), k), BigInt(so3.size()));
    EXPECT_EQ(spinor_kernel_order(builtin_form(1), k), BigInt(so3.size() / 2));
  }
  for (std::int64_t p : {3, 5}) {
    const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
    const auto so4 = oracle::special_orthogonal(diag_mod(4, p), p);
    EXPECT_EQ(special_orthogonal_order(builtin_form(2), k), BigInt(so4.size())) << p;
  }
  // Odd dimension 2m+1: q^{m^2} prod_{i<=m} (q^{2i} - 1).
  const ResidueRing k3 = make_residue_ring(FieldSpec::rational(), 3, 1);
  EXPECT_EQ(special_orthogonal_order(builtin_form(3), k3), BigInt(81 * 8 * 80));
  // Prime power lift and CRT multiply.
  const ResidueRing k9 = make_residue_ring(FieldSpec::rational(), 3, 2);
  EXPECT_EQ(special_orthogonal_order(builtin_form(1), k9), BigInt(24 * 27));
  const ResidueRing k15 = crt_product(k3, make_residue_ring(FieldSpec::rational(), 5, 1));
  EXPECT_EQ(special_orthogonal_order(builtin_form(1), k15), BigInt(24 * 120));
}

TEST(GroupOrders, WittTypeOfFourDimensionalForms) {
  // diag(1,1,1,-1): det = -1, a square mod 5 and 13, a nonsquare mod 3, 7.
  const QuadraticForm form = builtin_form(2);
  for (std::int64_t p : {3, 5, 7, 13}) {
    const ResidueRing k = make_residue_ring(FieldSpec::rational(), p, 1);
    const int expect = p % 4 == 1 ? 1 : -1;
    EXPECT_EQ(witt_type(form, k), expect);
    const BigInt q(p);
    EXPECT_EQ(special_orthogonal_order(form, k), q * q * (q * q - expect) * (q * q - 1));
  }
  EXPECT_EQ(witt_type(builtin_form(1), make_residue_ring(FieldSpec::rational(), 5, 1)), 0);
}

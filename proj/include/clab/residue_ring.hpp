#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "clab/error.hpp"

namespace clab {

using BigInt = boost::multiprecision::cpp_int;

// Q or a real quadratic field Q(sqrt d). The integral basis is (1, w) with
// w = sqrt d, or w = (1 + sqrt d)/2 when d = 1 mod 4.
class FieldSpec {
 public:
  enum class Kind { kRational, kQuadratic };

  static FieldSpec rational() { return FieldSpec(Kind::kRational, 0); }
  static FieldSpec quadratic(std::int64_t d);

  Kind kind() const { return kind_; }
  bool is_rational() const { return kind_ == Kind::kRational; }
  std::int64_t d() const { return d_; }
  bool uses_half_integers() const { return kind_ == Kind::kQuadratic && d_ % 4 == 1; }

  // w^2 = c0 + c1 * w
  std::int64_t omega_c0() const;
  std::int64_t omega_c1() const;

  // Real value of w at the fixed place (+sqrt d) or its conjugate (-sqrt d).
  double omega_real(bool conjugate_place = false) const;

  std::string describe() const;
  bool operator==(const FieldSpec&) const = default;

 private:
  FieldSpec(Kind kind, std::int64_t d) : kind_(kind), d_(d) {}
  Kind kind_;
  std::int64_t d_;
};

bool is_squarefree(std::int64_t d);
bool is_prime(std::int64_t p);

// a + b*w over the fixed integral basis. Canonical: each element of O_F has
// exactly one (a, b).
template <class Int>
struct BasicRingElement {
  Int a{0};
  Int b{0};
  bool operator==(const BasicRingElement&) const = default;
};

using RingElement = BasicRingElement<BigInt>;

namespace checked {

inline std::int64_t add(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_add_overflow(x, y, &r)) fail(ErrorKind::kOverflow, "64-bit coefficient overflow in addition");
  return r;
}
inline std::int64_t sub(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_sub_overflow(x, y, &r)) fail(ErrorKind::kOverflow, "64-bit coefficient overflow in subtraction");
  return r;
}
inline std::int64_t mul(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_mul_overflow(x, y, &r)) fail(ErrorKind::kOverflow, "64-bit coefficient overflow in multiplication");
  return r;
}
inline BigInt add(const BigInt& x, const BigInt& y) { return x + y; }
inline BigInt sub(const BigInt& x, const BigInt& y) { return x - y; }
inline BigInt mul(const BigInt& x, const BigInt& y) { return x * y; }

}  // namespace checked

// Arithmetic in O_F. `Int` is BigInt for general use; the lattice-point search
// instantiates it with int64_t, where every operation is overflow-checked so
// results stay exact or fail loudly.
template <class Int>
class IntegralRing {
 public:
  using Element = BasicRingElement<Int>;

  explicit IntegralRing(FieldSpec field)
      : field_(field), c0_(field.omega_c0()), c1_(field.omega_c1()) {}

  const FieldSpec& field() const { return field_; }

  Element zero() const { return {}; }
  Element one() const { return {Int(1), Int(0)}; }
  Element from_int(std::int64_t v) const { return {Int(v), Int(0)}; }
  Element omega() const { return {Int(0), Int(field_.is_rational() ? 0 : 1)}; }

  bool is_zero(const Element& x) const { return x.a == 0 && x.b == 0; }
  Element add(const Element& x, const Element& y) const {
    return {checked::add(x.a, y.a), checked::add(x.b, y.b)};
  }
  Element sub(const Element& x, const Element& y) const {
    return {checked::sub(x.a, y.a), checked::sub(x.b, y.b)};
  }
  Element neg(const Element& x) const { return {Int(-x.a), Int(-x.b)}; }
  Element mul(const Element& x, const Element& y) const {
    if (x.b == 0 && y.b == 0) return {checked::mul(x.a, y.a), Int(0)};
    const Int bd = checked::mul(x.b, y.b);
    return {checked::add(checked::mul(x.a, y.a), checked::mul(bd, Int(c0_))),
            checked::add(checked::add(checked::mul(x.a, y.b), checked::mul(x.b, y.a)),
                         checked::mul(bd, Int(c1_)))};
  }

  // Galois conjugate: w -> c1 - w.
  Element conjugate(const Element& x) const {
    return {checked::add(x.a, checked::mul(x.b, Int(c1_))), Int(-x.b)};
  }
  // Field norm a^2 + c1*a*b - c0*b^2.
  Int norm(const Element& x) const {
    return checked::sub(checked::add(checked::mul(x.a, x.a), checked::mul(checked::mul(Int(c1_), x.a), x.b)),
                        checked::mul(checked::mul(Int(c0_), x.b), x.b));
  }

  // Exact division; fails if y does not divide x in O_F.
  Element divide_exact(const Element& x, const Element& y) const {
    const Int n = norm(y);
    if (n == 0) fail(ErrorKind::kPrecondition, "division by zero in O_F");
    const Element num = mul(x, conjugate(y));
    if (num.a % n != 0 || num.b % n != 0) fail(ErrorKind::kPrecondition, "inexact division in O_F");
    return {Int(num.a / n), Int(num.b / n)};
  }

  double to_real(const Element& x, bool conjugate_place = false) const {
    return static_cast<double>(x.a) + static_cast<double>(x.b) * field_.omega_real(conjugate_place);
  }

 private:
  FieldSpec field_;
  std::int64_t c0_;
  std::int64_t c1_;
};

using ExactRing = IntegralRing<BigInt>;

enum class Splitting { kRational, kSplit, kInert };

struct PrimePower {
  std::int64_t prime = 0;
  int exponent = 0;
  Splitting splitting = Splitting::kRational;
  bool operator==(const PrimePower&) const = default;
};

// Residue a + b*w modulo the ring's modulus; b == 0 in degree-1 rings.
struct Residue {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  bool operator==(const Residue&) const = default;
};

// O_F / I for I a product of rational prime powers. Degree-1 rings (Q, or a
// split prime where w is sent to a fixed root) are Z/m; degree-2 rings (inert
// primes) are (Z/m)[w]. A CRT product of factors of equal degree is a single
// ring of the combined modulus.
class ResidueRing {
 public:
  using Element = Residue;

  const FieldSpec& field() const { return field_; }
  std::uint32_t modulus() const { return modulus_; }
  int degree() const { return degree_; }
  std::uint64_t cardinality() const;
  const std::vector<PrimePower>& factors() const { return factors_; }
  bool is_field() const { return factors_.size() == 1 && factors_[0].exponent == 1; }
  bool is_prime_power() const { return factors_.size() == 1; }
  // Residue field order |k_P| of factor i.
  std::uint64_t residue_field_order(std::size_t i = 0) const;
  // Image of sqrt d in a degree-1 quadratic ring (Hensel lift of the smallest
  // root mod the prime); 0 otherwise.
  std::uint32_t fixed_root() const { return sqrt_d_image_; }
  std::string describe() const;

  Residue zero() const { return {}; }
  Residue one() const { return {1 % modulus_, 0}; }
  Residue from_int(std::int64_t v) const;
  template <class Int>
  Residue reduce(const BasicRingElement<Int>& x) const;

  bool is_zero(Residue x) const { return x.a == 0 && x.b == 0; }
  Residue add(Residue x, Residue y) const;
  Residue sub(Residue x, Residue y) const;
  Residue neg(Residue x) const;
  Residue mul(Residue x, Residue y) const;
  Residue pow(Residue x, std::uint64_t e) const;
  std::uint32_t norm(Residue x) const;
  bool is_unit(Residue x) const;
  Residue inverse(Residue x) const;
  Residue divide_exact(Residue x, Residue y) const { return mul(x, inverse(y)); }

  // Reduction to a ring whose modulus divides this one (tower step or CRT
  // factor). Both rings must come from the same field and root choices.
  Residue project(Residue x, const ResidueRing& target) const;
  // The ring for factor i at exponent r (r <= stored exponent).
  ResidueRing factor_ring(std::size_t i, int exponent) const;
  ResidueRing residue_field(std::size_t i = 0) const { return factor_ring(i, 1); }

  std::vector<Residue> elements() const;

  bool operator==(const ResidueRing& o) const {
    return field_ == o.field_ && modulus_ == o.modulus_ && degree_ == o.degree_ && factors_ == o.factors_ &&
           omega_image_ == o.omega_image_;
  }

 private:
  friend ResidueRing make_residue_ring(const FieldSpec&, std::int64_t, int);
  friend ResidueRing crt_product(const ResidueRing&, const ResidueRing&);
  ResidueRing() : field_(FieldSpec::rational()) {}
  Residue combine_reduced(std::int64_t a, std::int64_t b) const;

  FieldSpec field_;
  std::uint32_t modulus_ = 1;
  int degree_ = 1;
  std::vector<PrimePower> factors_;
  std::uint32_t c0_ = 0;  // w^2 = c0 + c1 w (degree 2)
  std::uint32_t c1_ = 0;
  std::uint32_t omega_image_ = 0;  // degree 1 quadratic: image of w
  std::uint32_t sqrt_d_image_ = 0;
};

ResidueRing make_residue_ring(const FieldSpec& field, std::int64_t prime, int exponent);
ResidueRing crt_product(const ResidueRing& x, const ResidueRing& y);

enum class SquareClass { kZero, kSquareUnit, kNonsquareUnit, kNonUnit };
const char* to_string(SquareClass c);
// Group law on unit classes (Z/2).
SquareClass multiply_classes(SquareClass x, SquareClass y);

// Requires a residue field (single factor, exponent 1).
SquareClass square_class(Residue x, const ResidueRing& field);

std::int64_t mod_floor(const BigInt& x, std::int64_t m);
std::int64_t mod_floor(std::int64_t x, std::int64_t m);

template <class Int>
Residue ResidueRing::reduce(const BasicRingElement<Int>& x) const {
  return combine_reduced(mod_floor(x.a, modulus_), mod_floor(x.b, modulus_));
}

}  // namespace clab

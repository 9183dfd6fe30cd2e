#include "clab/residue_ring.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace clab {

namespace {

std::uint64_t mulmod(std::uint64_t x, std::uint64_t y, std::uint64_t m) { return (x * y) % m; }

std::int64_t inverse_mod(std::int64_t x, std::int64_t m) {
  std::int64_t g = m, r = mod_floor(x, m), s0 = 0, s1 = 1;
  while (r != 0) {
    const std::int64_t q = g / r;
    std::tie(g, r) = std::make_pair(r, g - q * r);
    std::tie(s0, s1) = std::make_pair(s1, s0 - q * s1);
  }
  if (g != 1) fail(ErrorKind::kPrecondition, "element is not invertible modulo " + std::to_string(m));
  return mod_floor(s0, m);
}

std::int64_t ipow(std::int64_t base, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r = checked::mul(r, base);
  return r;
}

// Smallest x in [0, p) with x^2 = d mod p, Hensel-lifted to p^r.
std::int64_t sqrt_mod_prime_power(std::int64_t d, std::int64_t p, int r) {
  std::int64_t root = -1;
  for (std::int64_t x = 0; x < p; ++x) {
    if (mod_floor(x * x - d, p) == 0) {
      root = x;
      break;
    }
  }
  if (root < 0) fail(ErrorKind::kPrecondition, "d is not a square modulo p");
  std::int64_t modulus = p;
  for (int k = 1; k < r; ++k) {
    modulus *= p;
    // Newton step x <- x - (x^2 - d) / (2x)
    const std::int64_t fx = mod_floor(static_cast<std::int64_t>((static_cast<__int128>(root) * root - d) % modulus), modulus);
    const std::int64_t inv = inverse_mod(mod_floor(2 * root, modulus), modulus);
    root = mod_floor(root - static_cast<std::int64_t>(static_cast<__int128>(fx) * inv % modulus), modulus);
  }
  return root;
}

// x = a mod m, x = b mod n with gcd(m, n) = 1
std::int64_t crt(std::int64_t a, std::int64_t m, std::int64_t b, std::int64_t n) {
  const std::int64_t t = mod_floor(static_cast<std::int64_t>(static_cast<__int128>(b - a) * inverse_mod(m, n) % n), n);
  return a + m * t;
}

}  // namespace

std::int64_t mod_floor(std::int64_t x, std::int64_t m) {
  const std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

std::int64_t mod_floor(const BigInt& x, std::int64_t m) {
  BigInt r = x % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

bool is_squarefree(std::int64_t d) {
  if (d == 0) return false;
  d = d < 0 ? -d : d;
  for (std::int64_t p = 2; p * p <= d; ++p)
    if (d % (p * p) == 0) return false;
  return true;
}

bool is_prime(std::int64_t p) {
  if (p < 2) return false;
  for (std::int64_t q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

FieldSpec FieldSpec::quadratic(std::int64_t d) {
  if (d < 2 || !is_squarefree(d))
    fail(ErrorKind::kValidation, "quadratic field needs square-free d >= 2, got " + std::to_string(d));
  return FieldSpec(Kind::kQuadratic, d);
}

std::int64_t FieldSpec::omega_c0() const {
  if (is_rational()) return 0;
  return uses_half_integers() ? (d_ - 1) / 4 : d_;
}

std::int64_t FieldSpec::omega_c1() const { return uses_half_integers() ? 1 : 0; }

double FieldSpec::omega_real(bool conjugate_place) const {
  if (is_rational()) return 0.0;
  const double root = std::sqrt(static_cast<double>(d_)) * (conjugate_place ? -1.0 : 1.0);
  return uses_half_integers() ? (1.0 + root) / 2.0 : root;
}

std::string FieldSpec::describe() const {
  if (is_rational()) return "Q";
  return "Q(sqrt " + std::to_string(d_) + ")";
}

ResidueRing make_residue_ring(const FieldSpec& field, std::int64_t prime, int exponent) {
  if (prime == 2) fail(ErrorKind::kUnsupportedPrime, "characteristic 2 is not supported");
  if (!is_prime(prime)) fail(ErrorKind::kUnsupportedPrime, std::to_string(prime) + " is not prime");
  if (exponent < 1) fail(ErrorKind::kPrecondition, "exponent must be >= 1");
  const std::int64_t m = ipow(prime, exponent);
  if (m > 65535) fail(ErrorKind::kPrecondition, "modulus " + std::to_string(m) + " exceeds the packed-entry limit 65535");

  ResidueRing ring;
  ring.field_ = field;
  ring.modulus_ = static_cast<std::uint32_t>(m);
  PrimePower pp{prime, exponent, Splitting::kRational};
  if (!field.is_rational()) {
    const std::int64_t d = field.d();
    if (d % prime == 0)
      fail(ErrorKind::kUnsupportedPrime, std::to_string(prime) + " ramifies in " + field.describe());
    bool split = false;
    for (std::int64_t x = 0; x < prime && !split; ++x) split = mod_floor(x * x - d, prime) == 0;
    if (split) {
      pp.splitting = Splitting::kSplit;
      const std::int64_t root = sqrt_mod_prime_power(d, prime, exponent);
      ring.sqrt_d_image_ = static_cast<std::uint32_t>(root);
      ring.omega_image_ = static_cast<std::uint32_t>(
          field.uses_half_integers() ? mod_floor((1 + root) * inverse_mod(2, m), m) : root);
    } else {
      pp.splitting = Splitting::kInert;
      ring.degree_ = 2;
      ring.c0_ = static_cast<std::uint32_t>(mod_floor(field.omega_c0(), m));
      ring.c1_ = static_cast<std::uint32_t>(mod_floor(field.omega_c1(), m));
    }
  }
  ring.factors_.push_back(pp);
  return ring;
}

ResidueRing crt_product(const ResidueRing& x, const ResidueRing& y) {
  if (!(x.field_ == y.field_)) fail(ErrorKind::kPrecondition, "CRT product of rings over different fields");
  if (x.degree_ != y.degree_)
    fail(ErrorKind::kUnsupportedPrime, "CRT product needs factors of equal residue degree");
  if (std::gcd(x.modulus_, y.modulus_) != 1) fail(ErrorKind::kPrecondition, "CRT factors must be coprime");
  const std::int64_t m = static_cast<std::int64_t>(x.modulus_) * y.modulus_;
  if (m > 65535) fail(ErrorKind::kPrecondition, "modulus " + std::to_string(m) + " exceeds the packed-entry limit 65535");
  ResidueRing ring;
  ring.field_ = x.field_;
  ring.modulus_ = static_cast<std::uint32_t>(m);
  ring.degree_ = x.degree_;
  ring.factors_ = x.factors_;
  ring.factors_.insert(ring.factors_.end(), y.factors_.begin(), y.factors_.end());
  if (ring.degree_ == 2) {
    ring.c0_ = static_cast<std::uint32_t>(mod_floor(ring.field_.omega_c0(), m));
    ring.c1_ = static_cast<std::uint32_t>(mod_floor(ring.field_.omega_c1(), m));
  } else if (!ring.field_.is_rational()) {
    ring.omega_image_ = static_cast<std::uint32_t>(crt(x.omega_image_, x.modulus_, y.omega_image_, y.modulus_));
    ring.sqrt_d_image_ = static_cast<std::uint32_t>(crt(x.sqrt_d_image_, x.modulus_, y.sqrt_d_image_, y.modulus_));
  }
  return ring;
}

std::uint64_t ResidueRing::cardinality() const {
  std::uint64_t c = 1;
  for (int i = 0; i < degree_; ++i) c *= modulus_;
  return c;
}

std::uint64_t ResidueRing::residue_field_order(std::size_t i) const {
  const auto p = static_cast<std::uint64_t>(factors_.at(i).prime);
  return degree_ == 2 ? p * p : p;
}

std::string ResidueRing::describe() const {
  std::ostringstream os;
  os << "O/(";
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << "*";
    os << factors_[i].prime;
    if (factors_[i].exponent > 1) os << "^" << factors_[i].exponent;
  }
  os << ") over " << field_.describe();
  return os.str();
}

Residue ResidueRing::from_int(std::int64_t v) const {
  return {static_cast<std::uint32_t>(mod_floor(v, modulus_)), 0};
}

Residue ResidueRing::combine_reduced(std::int64_t a, std::int64_t b) const {
  if (degree_ == 2) return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  if (field_.is_rational()) {
    if (b != 0) fail(ErrorKind::kPrecondition, "rational element with nonzero w-coefficient");
    return {static_cast<std::uint32_t>(a), 0};
  }
  return {static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) + mulmod(b, omega_image_, modulus_)) % modulus_), 0};
}

Residue ResidueRing::add(Residue x, Residue y) const {
  std::uint32_t a = x.a + y.a;
  if (a >= modulus_) a -= modulus_;
  std::uint32_t b = x.b + y.b;
  if (b >= modulus_) b -= modulus_;
  return {a, b};
}

Residue ResidueRing::neg(Residue x) const {
  return {x.a == 0 ? 0 : modulus_ - x.a, x.b == 0 ? 0 : modulus_ - x.b};
}

Residue ResidueRing::sub(Residue x, Residue y) const { return add(x, neg(y)); }

Residue ResidueRing::mul(Residue x, Residue y) const {
  if (degree_ == 1) return {static_cast<std::uint32_t>(mulmod(x.a, y.a, modulus_)), 0};
  const std::uint64_t m = modulus_;
  const std::uint64_t bd = mulmod(x.b, y.b, m);
  const std::uint64_t a = (mulmod(x.a, y.a, m) + mulmod(bd, c0_, m)) % m;
  const std::uint64_t b = (mulmod(x.a, y.b, m) + mulmod(x.b, y.a, m) + mulmod(bd, c1_, m)) % m;
  return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
}

Residue ResidueRing::pow(Residue x, std::uint64_t e) const {
  Residue r = one();
  while (e) {
    if (e & 1) r = mul(r, x);
    x = mul(x, x);
    e >>= 1;
  }
  return r;
}

std::uint32_t ResidueRing::norm(Residue x) const {
  if (degree_ == 1) return x.a;
  const std::uint64_t m = modulus_;
  const std::uint64_t v = (mulmod(x.a, x.a, m) + mulmod(mulmod(c1_, x.a, m), x.b, m) + m -
                           mulmod(mulmod(c0_, x.b, m), x.b, m)) % m;
  return static_cast<std::uint32_t>(v);
}

bool ResidueRing::is_unit(Residue x) const { return std::gcd(norm(x), modulus_) == 1; }

Residue ResidueRing::inverse(Residue x) const {
  const std::uint32_t n = norm(x);
  if (std::gcd(n, modulus_) != 1) fail(ErrorKind::kPrecondition, "inverse of a non-unit");
  const auto ninv = static_cast<std::uint64_t>(inverse_mod(n, modulus_));
  if (degree_ == 1) return {static_cast<std::uint32_t>(ninv), 0};
  // conj(a + b w) = (a + c1 b) - b w
  const Residue conj{static_cast<std::uint32_t>((x.a + mulmod(c1_, x.b, modulus_)) % modulus_),
                     x.b == 0 ? 0 : modulus_ - x.b};
  return mul(conj, {static_cast<std::uint32_t>(ninv), 0});
}

Residue ResidueRing::project(Residue x, const ResidueRing& target) const {
  if (modulus_ % target.modulus_ != 0 || degree_ != target.degree_ || !(field_ == target.field_))
    fail(ErrorKind::kPrecondition, "projection target is not a quotient of this ring");
  return {x.a % target.modulus_, x.b % target.modulus_};
}

ResidueRing ResidueRing::factor_ring(std::size_t i, int exponent) const {
  const PrimePower& pp = factors_.at(i);
  if (exponent < 1 || exponent > pp.exponent) fail(ErrorKind::kPrecondition, "factor exponent out of range");
  return make_residue_ring(field_, pp.prime, exponent);
}

std::vector<Residue> ResidueRing::elements() const {
  std::vector<Residue> out;
  out.reserve(cardinality());
  for (std::uint32_t b = 0; b < (degree_ == 2 ? modulus_ : 1u); ++b)
    for (std::uint32_t a = 0; a < modulus_; ++a) out.push_back({a, b});
  return out;
}

const char* to_string(SquareClass c) {
  switch (c) {
    case SquareClass::kZero: return "zero";
    case SquareClass::kSquareUnit: return "square-unit";
    case SquareClass::kNonsquareUnit: return "nonsquare-unit";
    case SquareClass::kNonUnit: return "non-unit";
  }
  return "?";
}

SquareClass multiply_classes(SquareClass x, SquareClass y) {
  const auto unit = [](SquareClass c) { return c == SquareClass::kSquareUnit || c == SquareClass::kNonsquareUnit; };
  if (!unit(x) || !unit(y)) fail(ErrorKind::kPrecondition, "square-class product defined on units only");
  return (x == y) ? SquareClass::kSquareUnit : SquareClass::kNonsquareUnit;
}

SquareClass square_class(Residue x, const ResidueRing& field) {
  if (!field.is_field())
    fail(ErrorKind::kPrecondition, "square classes are computed over residue fields only (r = 1)");
  if (field.is_zero(x)) return SquareClass::kZero;
  if (!field.is_unit(x)) return SquareClass::kNonUnit;
  const std::uint64_t q = field.cardinality();
  const Residue euler = field.pow(x, (q - 1) / 2);
  return euler == field.one() ? SquareClass::kSquareUnit : SquareClass::kNonsquareUnit;
}

}  // namespace clab

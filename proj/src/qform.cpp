#include "clab/qform.hpp"

#include <optional>
#include <sstream>

#include <Eigen/Dense>

namespace clab {

QuadraticForm::QuadraticForm(FieldSpec field, ExactMatrix gram) : field_(field), gram_(std::move(gram)) {
  const std::size_t m = gram_.size();
  if (m < 3) fail(ErrorKind::kDimension, "form: need at least 3 variables (n >= 1)");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(gram_(i, j) == gram_(j, i))) fail(ErrorKind::kValidation, "form: Gram matrix is not symmetric");
      if (field_.is_rational() && gram_(i, j).b != 0)
        fail(ErrorKind::kValidation, "form: irrational entry over Q");
    }
  }
  const ExactRing ring(field_);
  if (ring.is_zero(determinant(ring, gram_))) fail(ErrorKind::kValidation, "form: Gram matrix is degenerate");

  const auto count_negative = [&](bool conj) {
    const auto g = gram_real(conj);
    Eigen::Map<const Eigen::MatrixXd> mat(g.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
    int neg = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) neg += es.eigenvalues()(i) < 0;
    return neg;
  };
  if (count_negative(false) != 1)
    fail(ErrorKind::kValidation, "form: signature at the fixed place is not (n+1, 1)");
  if (!field_.is_rational() && count_negative(true) != 0)
    fail(ErrorKind::kValidation, "form: not definite at the conjugate place");
}

ResidueMatrix QuadraticForm::gram_mod(const ResidueRing& ring) const { return reduce_matrix(ring, gram_); }

std::vector<double> QuadraticForm::gram_real(bool conjugate_place) const {
  const ExactRing ring(field_);
  std::vector<double> out;
  out.reserve(gram_.data().size());
  for (const auto& x : gram_.data()) out.push_back(ring.to_real(x, conjugate_place));
  return out;
}

std::string QuadraticForm::encode() const {
  std::ostringstream os;
  os << field_.describe() << ";" << dim() << ";";
  for (const auto& x : gram_.data()) os << x.a << "," << x.b << ";";
  return os.str();
}

ResidueMatrix reduce_matrix(const ResidueRing& ring, const ExactMatrix& m) {
  ResidueMatrix out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(i, j) = ring.reduce(m(i, j));
  return out;
}

ResidueMatrix project_matrix(const ResidueRing& from, const ResidueMatrix& m, const ResidueRing& to) {
  ResidueMatrix out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(i, j) = from.project(m(i, j), to);
  return out;
}

namespace {

struct Decomposer {
  const ResidueRing& f;
  const ResidueMatrix& g;
  std::size_t dim;

  Residue q(const ResidueVector& v) const { return bilinear(f, g, std::span<const Residue>(v), std::span<const Residue>(v)); }

  ResidueVector column(const ResidueMatrix& s, std::size_t j) const {
    ResidueVector c(dim);
    for (std::size_t i = 0; i < dim; ++i) c[i] = f.sub(s(i, j), i == j ? f.one() : f.zero());
    return c;
  }

  ResidueVector sum(const ResidueVector& x, const ResidueVector& y, bool minus = false) const {
    ResidueVector r(dim);
    for (std::size_t i = 0; i < dim; ++i) r[i] = minus ? f.sub(x[i], y[i]) : f.add(x[i], y[i]);
    return r;
  }

  // Anisotropic vector in the image of S - I. The columns span the image; if
  // they are all isotropic but not mutually orthogonal, a sum of two works.
  std::optional<ResidueVector> image_anisotropic(const ResidueMatrix& s) const {
    std::vector<ResidueVector> cols;
    for (std::size_t j = 0; j < dim; ++j) {
      auto c = column(s, j);
      if (!f.is_zero(q(c))) return c;
      cols.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j) {
        auto c = sum(cols[i], cols[j]);
        if (!f.is_zero(q(c))) return c;
      }
    return std::nullopt;
  }

  // Small anisotropic vectors used to escape the totally-isotropic case.
  std::vector<ResidueVector> escape_candidates() const {
    std::vector<ResidueVector> out;
    const auto unit = [&](std::size_t i) {
      ResidueVector e(dim, f.zero());
      e[i] = f.one();
      return e;
    };
    for (std::size_t i = 0; i < dim; ++i) {
      auto e = unit(i);
      if (!f.is_zero(q(e))) out.push_back(e);
    }
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j)
        for (bool minus : {false, true}) {
          auto e = sum(unit(i), unit(j), minus);
          if (!f.is_zero(q(e))) out.push_back(e);
        }
    return out;
  }

  // Reflections r with S = tau_{r_1} ... tau_{r_k}, k <= budget.
  std::optional<std::vector<ResidueVector>> run(const ResidueMatrix& s, std::size_t budget, int escapes) const {
    if (s == identity(f, dim)) return std::vector<ResidueVector>{};
    if (budget == 0) return std::nullopt;
    if (auto w = image_anisotropic(s)) {
      // tau_w S fixes every vector S fixes, plus the preimage of w.
      auto rest = run(multiply(f, reflect(f, std::span<const Residue>(*w), g), s), budget - 1, escapes);
      if (rest) {
        rest->insert(rest->begin(), *w);
        return rest;
      }
    }
    if (escapes == 0) return std::nullopt;
    for (const auto& u : escape_candidates()) {
      auto rest = run(multiply(f, s, reflect(f, std::span<const Residue>(u), g)), budget - 1, escapes - 1);
      if (rest) {
        rest->push_back(u);
        return rest;
      }
    }
    return std::nullopt;
  }
};

}  // namespace

std::vector<ResidueVector> cartan_dieudonne(const ResidueRing& field, const ResidueMatrix& m,
                                            const ResidueMatrix& gram) {
  if (!field.is_field()) fail(ErrorKind::kPrecondition, "Cartan-Dieudonne needs a residue field");
  if (!is_orthogonal(field, m, gram)) fail(ErrorKind::kPrecondition, "matrix is not orthogonal for the form");
  const Decomposer d{field, gram, gram.size()};
  auto result = d.run(m, gram.size(), 2);
  if (!result) fail(ErrorKind::kNumerical, "Cartan-Dieudonne search failed");

  auto check = identity(field, gram.size());
  for (const auto& w : *result) check = multiply(field, check, reflect(field, std::span<const Residue>(w), gram));
  if (!(check == m)) fail(ErrorKind::kNumerical, "Cartan-Dieudonne recomposition mismatch");
  return *result;
}

SquareClass spinor_norm(const ResidueRing& field, const ResidueMatrix& m, const ResidueMatrix& gram) {
  if (determinant(field, m) != field.one()) fail(ErrorKind::kPrecondition, "spinor norm needs det = 1");
  const auto ws = cartan_dieudonne(field, m, gram);
  Residue prod = field.one();
  for (const auto& w : ws) prod = field.mul(prod, bilinear(field, gram, std::span<const Residue>(w), std::span<const Residue>(w)));
  return square_class(prod, field);
}

SquareClass spinor_norm_prime_power(const ResidueRing& ring, const ResidueMatrix& m, const ResidueMatrix& gram) {
  if (!ring.is_prime_power()) fail(ErrorKind::kPrecondition, "spinor_norm_prime_power needs a prime-power ring");
  if (!is_special_orthogonal(ring, m, gram)) fail(ErrorKind::kPrecondition, "matrix is not special orthogonal");
  const ResidueRing field = ring.residue_field();
  return spinor_norm(field, project_matrix(ring, m, field), project_matrix(ring, gram, field));
}

std::uint32_t spinor_class(const ResidueRing& ring, const ResidueMatrix& m, const ResidueMatrix& gram) {
  std::uint32_t bits = 0;
  for (std::size_t i = 0; i < ring.factors().size(); ++i) {
    const ResidueRing field = ring.residue_field(i);
    if (spinor_norm(field, project_matrix(ring, m, field), project_matrix(ring, gram, field)) ==
        SquareClass::kNonsquareUnit)
      bits |= 1u << i;
  }
  return bits;
}

int witt_type(const QuadraticForm& form, const ResidueRing& field) {
  const std::size_t m = form.dim();
  if (m % 2 == 1) return 0;
  Residue det = determinant(field, form.gram_mod(field));
  if (!field.is_unit(det)) fail(ErrorKind::kUnsupportedPrime, "form is degenerate modulo " + field.describe());
  if ((m / 2) % 2 == 1) det = field.neg(det);
  return square_class(det, field) == SquareClass::kSquareUnit ? 1 : -1;
}

BigInt special_orthogonal_order(const QuadraticForm& form, const ResidueRing& ring) {
  const auto m = static_cast<unsigned>(form.dim());
  BigInt total = 1;
  for (std::size_t i = 0; i < ring.factors().size(); ++i) {
    const ResidueRing field = ring.residue_field(i);
    const BigInt q = field.cardinality();
    if (!field.is_unit(determinant(field, form.gram_mod(field))))
      fail(ErrorKind::kUnsupportedPrime, "form is degenerate modulo " + field.describe());
    const unsigned k = m / 2;
    BigInt order;
    if (m % 2 == 1) {
      order = boost::multiprecision::pow(q, k * k);
      for (unsigned j = 1; j <= k; ++j) order *= boost::multiprecision::pow(q, 2 * j) - 1;
    } else {
      const int eps = witt_type(form, field);
      order = boost::multiprecision::pow(q, k * (k - 1)) * (boost::multiprecision::pow(q, k) - eps);
      for (unsigned j = 1; j < k; ++j) order *= boost::multiprecision::pow(q, 2 * j) - 1;
    }
    const auto r = static_cast<unsigned>(ring.factors()[i].exponent);
    order *= boost::multiprecision::pow(q, (r - 1) * m * (m - 1) / 2);
    total *= order;
  }
  return total;
}

BigInt spinor_kernel_order(const QuadraticForm& form, const ResidueRing& ring) {
  BigInt order = special_orthogonal_order(form, ring);
  for (std::size_t i = 0; i < ring.factors().size(); ++i) order /= 2;
  return order;
}

}  // namespace clab

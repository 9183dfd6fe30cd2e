#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "clab/matrix.hpp"
#include "clab/residue_ring.hpp"

namespace clab {

using ExactMatrix = Matrix<RingElement>;
using ResidueMatrix = Matrix<Residue>;
using ResidueVector = std::vector<Residue>;

// Nondegenerate form of signature (n+1, 1) at the fixed real place (and
// definite at the conjugate place for quadratic fields). Matrices acting on it
// are (n+2)x(n+2).
class QuadraticForm {
 public:
  // Validates symmetry, det != 0 and the archimedean signature.
  QuadraticForm(FieldSpec field, ExactMatrix gram);

  const FieldSpec& field() const { return field_; }
  int n() const { return static_cast<int>(gram_.size()) - 2; }
  std::size_t dim() const { return gram_.size(); }
  const ExactMatrix& gram() const { return gram_; }
  ResidueMatrix gram_mod(const ResidueRing& ring) const;
  // Real Gram matrix at the fixed place, or at the conjugate place b -> -b.
  std::vector<double> gram_real(bool conjugate_place = false) const;
  // Stable text encoding, used in hashes.
  std::string encode() const;

 private:
  FieldSpec field_;
  ExactMatrix gram_;
};

// Mt G M == G and det M == 1, exactly.
template <class Ring>
bool is_orthogonal(const Ring& ring, const MatrixOver<Ring>& m, const MatrixOver<Ring>& gram) {
  if (m.size() != gram.size()) fail(ErrorKind::kDimension, "matrix and form sizes differ");
  return multiply(ring, transpose<Ring>(m), multiply(ring, gram, m)) == gram;
}

template <class Ring>
bool is_special_orthogonal(const Ring& ring, const MatrixOver<Ring>& m, const MatrixOver<Ring>& gram) {
  return is_orthogonal(ring, m, gram) && determinant(ring, m) == ring.one();
}

// B(x, y) = xt G y
template <class Ring>
typename Ring::Element bilinear(const Ring& ring, const MatrixOver<Ring>& gram,
                                std::span<const typename Ring::Element> x,
                                std::span<const typename Ring::Element> y) {
  const auto gy = apply(ring, gram, y);
  auto s = ring.zero();
  for (std::size_t i = 0; i < x.size(); ++i) s = ring.add(s, ring.mul(x[i], gy[i]));
  return s;
}

// tau_v = I - 2 v vt G / q(v). Over O_F the division must be exact for every
// entry, which holds for roots of the lattice.
template <class Ring>
MatrixOver<Ring> reflect(const Ring& ring, std::span<const typename Ring::Element> v, const MatrixOver<Ring>& gram) {
  const std::size_t n = gram.size();
  if (v.size() != n) fail(ErrorKind::kDimension, "reflection vector size mismatch");
  const auto qv = bilinear(ring, gram, v, v);
  if (ring.is_zero(qv)) fail(ErrorKind::kSingularVector, "reflection in an isotropic vector");
  if constexpr (std::is_same_v<Ring, ResidueRing>) {
    if (!ring.is_unit(qv)) fail(ErrorKind::kSingularVector, "q(v) is not a unit");
  }
  const auto gv = apply(ring, gram, v);  // G v; (v vt G)_{ij} = v_i (G v)_j
  auto m = identity(ring, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto num = ring.mul(ring.from_int(2), ring.mul(v[i], gv[j]));
      m(i, j) = ring.sub(m(i, j), ring.divide_exact(num, qv));
    }
  }
  return m;
}

// Reflection vectors w_1..w_k with M = tau_{w_1} ... tau_{w_k}, k <= dim.
// Requires a residue field. The result is verified by recomposition.
std::vector<ResidueVector> cartan_dieudonne(const ResidueRing& field, const ResidueMatrix& m,
                                            const ResidueMatrix& gram);

// Class of prod q(w_i) over a decomposition. Requires a residue field.
SquareClass spinor_norm(const ResidueRing& field, const ResidueMatrix& m, const ResidueMatrix& gram);

// Prime-power level: project to the residue field and take the field-level
// class. Requires a single prime-power factor.
SquareClass spinor_norm_prime_power(const ResidueRing& ring, const ResidueMatrix& m, const ResidueMatrix& gram);

// Bit i set iff the spinor norm at factor i is a nonsquare; 0 is trivial.
std::uint32_t spinor_class(const ResidueRing& ring, const ResidueMatrix& m, const ResidueMatrix& gram);

ResidueMatrix reduce_matrix(const ResidueRing& ring, const ExactMatrix& m);
ResidueMatrix project_matrix(const ResidueRing& from, const ResidueMatrix& m, const ResidueRing& to);

// Order of SO(q) over the ring, from the classical formulas for each residue
// field and the l^{(r-1) dim SO} lift at prime powers; CRT factors multiply.
BigInt special_orthogonal_order(const QuadraticForm& form, const ResidueRing& ring);
// ker SN has index 2 in SO at each factor (dim >= 2).
BigInt spinor_kernel_order(const QuadraticForm& form, const ResidueRing& ring);
// Witt type of an even-dimensional form over the residue field: +1 if
// (-1)^{m/2} det is a square, else -1; 0 for odd dimension.
int witt_type(const QuadraticForm& form, const ResidueRing& field);

}  // namespace clab

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "clab/error.hpp"

namespace clab {

// Dense square matrix, row-major. Arithmetic lives in free functions taking a
// ring context, since neither O_F nor its residue rings have context-free
// multiplication.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, const T& fill = T{}) : n_(n), data_(n * n, fill) {}
  Matrix(std::size_t n, std::vector<T> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != n * n) fail(ErrorKind::kDimension, "matrix data does not match size");
  }

  std::size_t size() const { return n_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

template <class Ring>
using MatrixOver = Matrix<typename Ring::Element>;

template <class Ring>
MatrixOver<Ring> identity(const Ring& ring, std::size_t n) {
  MatrixOver<Ring> m(n, ring.zero());
  for (std::size_t i = 0; i < n; ++i) m(i, i) = ring.one();
  return m;
}

template <class Ring>
MatrixOver<Ring> multiply(const Ring& ring, const MatrixOver<Ring>& a, const MatrixOver<Ring>& b) {
  const std::size_t n = a.size();
  if (b.size() != n) fail(ErrorKind::kDimension, "matrix product size mismatch");
  MatrixOver<Ring> c(n, ring.zero());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& aik = a(i, k);
      if (ring.is_zero(aik)) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) = ring.add(c(i, j), ring.mul(aik, b(k, j)));
    }
  }
  return c;
}

template <class Ring>
MatrixOver<Ring> transpose(const MatrixOver<Ring>& a) {
  MatrixOver<Ring> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) t(j, i) = a(i, j);
  return t;
}

template <class Ring>
std::vector<typename Ring::Element> apply(const Ring& ring, const MatrixOver<Ring>& a,
                                          std::span<const typename Ring::Element> v) {
  const std::size_t n = a.size();
  if (v.size() != n) fail(ErrorKind::kDimension, "vector size mismatch");
  std::vector<typename Ring::Element> out(n, ring.zero());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] = ring.add(out[i], ring.mul(a(i, j), v[j]));
  return out;
}

// Determinant by cofactor expansion along the first row. Division-free, so it
// is exact over any commutative ring; sizes here never exceed 6 or so.
template <class Ring>
typename Ring::Element determinant(const Ring& ring, const MatrixOver<Ring>& a) {
  const std::size_t n = a.size();
  if (n == 0) return ring.one();
  if (n == 1) return a(0, 0);
  if (n == 2) return ring.sub(ring.mul(a(0, 0), a(1, 1)), ring.mul(a(0, 1), a(1, 0)));
  auto det = ring.zero();
  for (std::size_t col = 0; col < n; ++col) {
    if (ring.is_zero(a(0, col))) continue;
    MatrixOver<Ring> minor(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t jj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == col) continue;
        minor(i - 1, jj++) = a(i, j);
      }
    }
    auto term = ring.mul(a(0, col), determinant(ring, minor));
    det = (col % 2 == 0) ? ring.add(det, term) : ring.sub(det, term);
  }
  return det;
}

// Cofactor transpose; for det = 1 this is the inverse.
template <class Ring>
MatrixOver<Ring> adjugate(const Ring& ring, const MatrixOver<Ring>& a) {
  const std::size_t n = a.size();
  MatrixOver<Ring> adj(n, ring.zero());
  if (n == 1) {
    adj(0, 0) = ring.one();
    return adj;
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      MatrixOver<Ring> minor(n - 1);
      std::size_t ii = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == r) continue;
        std::size_t jj = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == c) continue;
          minor(ii, jj++) = a(i, j);
        }
        ++ii;
      }
      auto cof = determinant(ring, minor);
      adj(c, r) = ((r + c) % 2 == 0) ? cof : ring.neg(cof);
    }
  }
  return adj;
}

}  // namespace clab

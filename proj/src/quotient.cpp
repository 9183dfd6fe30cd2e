#include "clab/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>

#include "clab/detail/packed_set.hpp"
#include "clab/fit.hpp"

namespace clab {

// Elements as packed uint16 words: row-major entries, two words per entry in
// degree-2 rings.
struct QuotientTable::Store : detail::PackedSet<std::uint16_t> {
  using PackedSet::PackedSet;
};

QuotientTable::QuotientTable(ResidueRing ring) : ring_(std::move(ring)) {}
QuotientTable::QuotientTable(QuotientTable&&) noexcept = default;
QuotientTable& QuotientTable::operator=(QuotientTable&&) noexcept = default;
QuotientTable::~QuotientTable() = default;

namespace {

// Matrix arithmetic on packed words.
class Packed {
 public:
  Packed(const ResidueRing& ring, std::size_t dim) : ring_(ring), dim_(dim), deg_(ring.degree()), m_(ring.modulus()) {}

  std::size_t words() const { return dim_ * dim_ * static_cast<std::size_t>(deg_); }

  void pack(const ResidueMatrix& x, std::uint16_t* out) const {
    for (std::size_t i = 0; i < dim_ * dim_; ++i) {
      const Residue r = x.data()[i];
      if (deg_ == 1) {
        out[i] = static_cast<std::uint16_t>(r.a);
      } else {
        out[2 * i] = static_cast<std::uint16_t>(r.a);
        out[2 * i + 1] = static_cast<std::uint16_t>(r.b);
      }
    }
  }

  ResidueMatrix unpack(const std::uint16_t* x) const {
    ResidueMatrix m(dim_);
    for (std::size_t i = 0; i < dim_ * dim_; ++i)
      m.data()[i] = deg_ == 1 ? Residue{x[i], 0} : Residue{x[2 * i], x[2 * i + 1]};
    return m;
  }

  void mul(const std::uint16_t* x, const std::uint16_t* y, std::uint16_t* out) const {
    const std::size_t d = dim_;
    if (deg_ == 1) {
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          std::uint64_t s = 0;
          for (std::size_t k = 0; k < d; ++k) s += static_cast<std::uint64_t>(x[i * d + k]) * y[k * d + j];
          out[i * d + j] = static_cast<std::uint16_t>(s % m_);
        }
      return;
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        Residue s = ring_.zero();
        for (std::size_t k = 0; k < d; ++k) {
          const Residue a{x[2 * (i * d + k)], x[2 * (i * d + k) + 1]};
          const Residue b{y[2 * (k * d + j)], y[2 * (k * d + j) + 1]};
          s = ring_.add(s, ring_.mul(a, b));
        }
        out[2 * (i * d + j)] = static_cast<std::uint16_t>(s.a);
        out[2 * (i * d + j) + 1] = static_cast<std::uint16_t>(s.b);
      }
  }

  // M^t G M == G and det M == 1.
  bool special_orthogonal(const std::uint16_t* x, const ResidueMatrix& gram,
                          const std::vector<std::uint64_t>& gram_flat) const {
    if (deg_ != 1 || dim_ > 6) return is_special_orthogonal(ring_, unpack(x), gram);
    const std::size_t d = dim_;
    std::uint64_t gm[36];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        std::uint64_t s = 0;
        for (std::size_t k = 0; k < d; ++k) s += gram_flat[i * d + k] * x[k * d + j];
        gm[i * d + j] = s % m_;
      }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        std::uint64_t s = 0;
        for (std::size_t k = 0; k < d; ++k) s += x[k * d + i] * gm[k * d + j];
        if (s % m_ != gram_flat[i * d + j]) return false;
      }
    std::uint64_t a[36];
    for (std::size_t i = 0; i < d * d; ++i) a[i] = x[i];
    return det(a, d) == 1 % m_;
  }

 private:
  // Division-free cofactor expansion mod m on a d x d row-major block.
  std::uint64_t det(const std::uint64_t* a, std::size_t d) const {
    if (d == 1) return a[0] % m_;
    if (d == 2) return (a[0] * a[3] % m_ + m_ - a[1] * a[2] % m_) % m_;
    std::uint64_t minor[25];
    std::uint64_t total = 0;
    for (std::size_t col = 0; col < d; ++col) {
      if (a[col] == 0) continue;
      std::size_t t = 0;
      for (std::size_t i = 1; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          if (j != col) minor[t++] = a[i * d + j];
      const std::uint64_t term = a[col] * det(minor, d - 1) % m_;
      total = (col % 2 == 0) ? (total + term) % m_ : (total + m_ - term) % m_;
    }
    return total;
  }

  const ResidueRing& ring_;
  std::size_t dim_;
  int deg_;
  std::uint64_t m_;
};

void invert_edges(const std::vector<std::vector<std::uint32_t>>& edges, std::vector<std::vector<std::uint32_t>>& inv,
                  std::size_t count) {
  inv.assign(edges.size(), std::vector<std::uint32_t>(count, 0xffffffffu));
  for (std::size_t g = 0; g < edges.size(); ++g) {
    for (std::size_t i = 0; i < count; ++i) {
      auto& slot = inv[g][edges[g][i]];
      if (slot != 0xffffffffu) fail(ErrorKind::kNumerical, "generator action is not a permutation");
      slot = static_cast<std::uint32_t>(i);
    }
  }
}

}  // namespace

ResidueMatrix QuotientTable::element(std::size_t id) const {
  if (!store_) fail(ErrorKind::kPrecondition, "synthetic table has no matrix elements");
  if (id >= count_) fail(ErrorKind::kPrecondition, "element id out of range");
  return Packed(ring_, dim_).unpack(store_->get(id));
}

std::optional<std::uint32_t> QuotientTable::find(const ResidueMatrix& m) const {
  if (!store_) fail(ErrorKind::kPrecondition, "synthetic table has no matrix elements");
  if (m.size() != dim_) fail(ErrorKind::kDimension, "matrix size differs from table");
  const Packed p(ring_, dim_);
  std::vector<std::uint16_t> buf(p.words());
  p.pack(m, buf.data());
  return store_->find(buf.data());
}

QuotientTable enumerate_quotient(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                 const ResidueRing& ring, const EnumerateOptions& options) {
  std::vector<ResidueMatrix> reduced;
  for (const auto& g : gens) {
    if (g.size() != form.dim()) fail(ErrorKind::kDimension, "generator size differs from the form");
    reduced.push_back(reduce_matrix(ring, g));
  }
  return enumerate_quotient(reduced, form.gram_mod(ring), ring, options);
}

QuotientTable enumerate_quotient(const std::vector<ResidueMatrix>& gens, const ResidueMatrix& gram,
                                 const ResidueRing& ring, const EnumerateOptions& options) {
  if (options.element_budget < 1) fail(ErrorKind::kPrecondition, "element budget must be >= 1");
  const std::size_t dim = gram.size();
  QuotientTable t(ring);
  t.dim_ = dim;
  t.gram_ = gram;
  t.gens_ = gens;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (!is_special_orthogonal(ring, gens[g], gram))
      fail(ErrorKind::kPrecondition, "generator " + std::to_string(g) + " is not special orthogonal mod " +
                                         ring.describe());
    t.gen_spinor_.push_back(static_cast<std::uint8_t>(spinor_class(ring, gens[g], gram)));
  }

  const Packed p(ring, dim);
  std::vector<std::uint64_t> gram_flat;
  for (const auto& r : gram.data()) gram_flat.push_back(r.a);
  t.store_ = std::make_unique<QuotientTable::Store>(p.words());
  auto& store = *t.store_;

  std::vector<std::vector<std::uint16_t>> packed_gens(gens.size(), std::vector<std::uint16_t>(p.words()));
  for (std::size_t g = 0; g < gens.size(); ++g) p.pack(gens[g], packed_gens[g].data());

  std::vector<std::uint16_t> buf(p.words());
  p.pack(identity(ring, dim), buf.data());
  store.insert(buf.data());
  t.depth_.push_back(0);
  t.spinor_.push_back(0);
  if (options.store_edges) t.edges_.assign(gens.size(), {});

  bool closed = true;
  for (std::size_t id = 0; id < store.size() && closed; ++id) {
    const std::uint16_t* x = store.get(id);
    for (std::size_t g = 0; g < gens.size(); ++g) {
      p.mul(x, packed_gens[g].data(), buf.data());
      if (store.size() >= options.element_budget && !store.find(buf.data())) {
        closed = false;
        break;
      }
      const auto [nid, inserted] = store.insert(buf.data());
      if (inserted) {
        if (options.verify_elements && !p.special_orthogonal(buf.data(), gram, gram_flat))
          fail(ErrorKind::kNumerical, "enumerated element fails the special-orthogonal check");
        t.depth_.push_back(static_cast<std::uint16_t>(std::min<int>(t.depth_[id] + 1, 0xffff)));
        t.spinor_.push_back(static_cast<std::uint8_t>(t.spinor_[id] ^ t.gen_spinor_[g]));
      }
      if (options.store_edges) t.edges_[g].push_back(nid);
    }
  }
  t.count_ = store.size();
  t.closed_ = closed;
  if (!closed || !options.store_edges) {
    t.edges_.clear();
  } else {
    invert_edges(t.edges_, t.inverse_edges_, t.count_);
  }
  return t;
}

QuotientTable QuotientTable::from_permutations(const std::vector<std::vector<std::uint32_t>>& perms) {
  if (perms.empty()) fail(ErrorKind::kPrecondition, "need at least one permutation");
  QuotientTable t(make_residue_ring(FieldSpec::rational(), 3, 1));
  t.count_ = perms[0].size();
  for (const auto& p : perms) {
    if (p.size() != t.count_) fail(ErrorKind::kDimension, "permutations differ in size");
    for (auto v : p)
      if (v >= t.count_) fail(ErrorKind::kPrecondition, "permutation entry out of range");
  }
  t.closed_ = true;
  t.edges_ = perms;
  t.gen_spinor_.assign(perms.size(), 0);
  t.depth_.assign(t.count_, 0);
  t.spinor_.assign(t.count_, 0);
  invert_edges(t.edges_, t.inverse_edges_, t.count_);
  return t;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::kIo, "truncated table blob");
  return v;
}
template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
std::vector<T> get_vec(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) fail(ErrorKind::kIo, "truncated table blob");
  return v;
}

void put_matrix(std::ostream& os, const ResidueMatrix& m) {
  for (const auto& r : m.data()) {
    put<std::uint32_t>(os, r.a);
    put<std::uint32_t>(os, r.b);
  }
}
ResidueMatrix get_matrix(std::istream& is, std::size_t dim) {
  ResidueMatrix m(dim);
  for (auto& r : m.data()) {
    r.a = get<std::uint32_t>(is);
    r.b = get<std::uint32_t>(is);
  }
  return m;
}

constexpr char kMagic[8] = {'C', 'L', 'A', 'B', 'Q', 'T', '0', '1'};

}  // namespace

void QuotientTable::serialize(std::ostream& os) const {
  if (!store_) fail(ErrorKind::kPrecondition, "synthetic tables are not serialized");
  os.write(kMagic, sizeof kMagic);
  put<std::uint8_t>(os, ring_.field().is_rational() ? 0 : 1);
  put<std::int64_t>(os, ring_.field().d());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ring_.factors().size()));
  for (const auto& f : ring_.factors()) {
    put<std::int64_t>(os, f.prime);
    put<std::int32_t>(os, f.exponent);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dim_));
  put<std::uint64_t>(os, count_);
  put<std::uint8_t>(os, closed_ ? 1 : 0);
  put_matrix(os, gram_);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(gens_.size()));
  for (const auto& g : gens_) put_matrix(os, g);
  put_vec(os, gen_spinor_);
  const std::size_t words = store_->words();
  for (std::size_t id = 0; id < count_; ++id)
    os.write(reinterpret_cast<const char*>(store_->get(id)), static_cast<std::streamsize>(words * sizeof(std::uint16_t)));
  put_vec(os, depth_);
  put_vec(os, spinor_);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(edges_.size()));
  for (const auto& e : edges_) put_vec(os, e);
  if (!os) fail(ErrorKind::kIo, "failed writing table blob");
}

QuotientTable QuotientTable::deserialize(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::kIo, "not a quotient table blob");
  const auto kind = get<std::uint8_t>(is);
  const auto d = get<std::int64_t>(is);
  const FieldSpec field = kind == 0 ? FieldSpec::rational() : FieldSpec::quadratic(d);
  const auto nf = get<std::uint32_t>(is);
  std::optional<ResidueRing> ring;
  for (std::uint32_t i = 0; i < nf; ++i) {
    const auto prime = get<std::int64_t>(is);
    const auto e = get<std::int32_t>(is);
    ResidueRing r = make_residue_ring(field, prime, e);
    ring = ring ? crt_product(*ring, r) : r;
  }
  if (!ring) fail(ErrorKind::kIo, "table blob without ring factors");
  QuotientTable t(*ring);
  t.dim_ = get<std::uint32_t>(is);
  const auto count = get<std::uint64_t>(is);
  t.closed_ = get<std::uint8_t>(is) != 0;
  t.gram_ = get_matrix(is, t.dim_);
  const auto ng = get<std::uint32_t>(is);
  for (std::uint32_t g = 0; g < ng; ++g) t.gens_.push_back(get_matrix(is, t.dim_));
  t.gen_spinor_ = get_vec<std::uint8_t>(is);
  const Packed p(t.ring_, t.dim_);
  t.store_ = std::make_unique<Store>(p.words());
  std::vector<std::uint16_t> buf(p.words());
  for (std::uint64_t id = 0; id < count; ++id) {
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(std::uint16_t)));
    if (!is) fail(ErrorKind::kIo, "truncated table blob");
    if (!t.store_->insert(buf.data()).second) fail(ErrorKind::kIo, "duplicate element in table blob");
  }
  t.count_ = count;
  t.depth_ = get_vec<std::uint16_t>(is);
  t.spinor_ = get_vec<std::uint8_t>(is);
  const auto ne = get<std::uint32_t>(is);
  for (std::uint32_t g = 0; g < ne; ++g) t.edges_.push_back(get_vec<std::uint32_t>(is));
  if (!t.edges_.empty()) invert_edges(t.edges_, t.inverse_edges_, t.count_);
  return t;
}

StrongApproxReport verify_strong_approximation(const QuadraticForm& form, const QuotientTable& table) {
  StrongApproxReport rep;
  rep.closed = table.closed();
  if (!table.closed()) fail(ErrorKind::kBudgetExceeded, "quotient enumeration did not close within the budget");
  const ResidueRing& ring = table.ring();
  rep.reached = table.size();
  std::uint64_t kernel = 0;
  std::set<std::uint8_t> image;
  for (std::size_t id = 0; id < table.size(); ++id) {
    kernel += table.spinor_bits(id) == 0;
    image.insert(table.spinor_bits(id));
  }
  rep.reached_kernel = kernel;
  rep.spinor_image.assign(image.begin(), image.end());
  for (std::size_t g = 0; g < table.generator_count(); ++g) rep.generator_classes.push_back(table.generator_spinor_bits(g));
  rep.ambient = special_orthogonal_order(form, ring);
  rep.target = spinor_kernel_order(form, ring);
  rep.index_defect = rep.target / rep.reached_kernel;
  rep.surjective_onto_spinor_kernel = rep.reached_kernel == rep.target;

  // Cross-check the propagated classes against direct decompositions.
  const std::size_t n = table.size();
  const std::size_t step = std::max<std::size_t>(1, n / 64);
  for (std::size_t id = 0; id < n; id += (id < 32 ? 1 : step)) {
    const auto direct = spinor_class(ring, table.element(id), table.gram());
    if (direct != table.spinor_bits(id))
      fail(ErrorKind::kNumerical, "propagated spinor class disagrees with direct computation at id " + std::to_string(id));
    ++rep.spinor_checks;
  }
  return rep;
}

StrongApproxReport verify_strong_approximation(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                               const ResidueRing& ring, const EnumerateOptions& options) {
  EnumerateOptions opts = options;
  opts.store_edges = false;
  return verify_strong_approximation(form, enumerate_quotient(form, gens, ring, opts));
}

OrderScalingReport order_scaling_report(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                        const std::vector<Level>& levels, const EnumerateOptions& options) {
  OrderScalingReport rep;
  EnumerateOptions opts = options;
  opts.store_edges = false;
  for (const auto& lv : levels) {
    LevelRow row;
    row.prime = lv.prime;
    row.exponent = lv.exponent;
    try {
      const ResidueRing ring = make_residue_ring(form.field(), lv.prime, lv.exponent);
      row.ring_size = ring.cardinality();
      const QuotientTable t = enumerate_quotient(form, gens, ring, opts);
      row.order = t.size();
      row.closed = t.closed();
      if (!row.closed) row.note = "budget exceeded; partial order";
    } catch (const Error& e) {
      row.note = e.what();
    }
    rep.rows.push_back(row);
  }
  return summarize_orders(std::move(rep.rows));
}

OrderScalingReport summarize_orders(std::vector<LevelRow> rows) {
  OrderScalingReport rep;
  rep.rows = std::move(rows);
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows) {
    if (!r.closed || r.exponent != 1) continue;
    xs.push_back(std::log(static_cast<double>(r.ring_size)));
    ys.push_back(std::log(static_cast<double>(r.order)));
  }
  rep.fitted_points = xs.size();
  if (xs.size() >= 2) {
    const LinearFit f = fit_line(xs, ys);
    rep.exponent = f.slope;
    rep.exponent_stderr = f.slope_stderr;
  }
  for (const auto& a : rep.rows)
    for (const auto& b : rep.rows)
      if (a.closed && b.closed && a.prime == b.prime && b.exponent == a.exponent + 1)
        rep.ladders.push_back({a.prime, a.exponent, b.order / a.order, b.order % a.order == 0});
  return rep;
}

CrtCheck crt_product_check(const QuadraticForm& form, const std::vector<ExactMatrix>& gens, std::int64_t l1,
                           std::int64_t l2, const EnumerateOptions& options) {
  CrtCheck c;
  if (l1 == l2) {
    c.skipped = true;
    c.diagnostic = "primes must differ";
    return c;
  }
  try {
    const ResidueRing r1 = make_residue_ring(form.field(), l1, 1);
    const ResidueRing r2 = make_residue_ring(form.field(), l2, 1);
    const auto s1 = verify_strong_approximation(form, gens, r1, options);
    const auto s2 = verify_strong_approximation(form, gens, r2, options);
    c.order1 = s1.reached;
    c.order2 = s2.reached;
    c.kernel1 = s1.reached_kernel;
    c.kernel2 = s2.reached_kernel;
    if (!s1.surjective_onto_spinor_kernel || !s2.surjective_onto_spinor_kernel) {
      c.skipped = true;
      c.diagnostic = "not surjective onto the spinor kernel at " +
                     std::to_string(s1.surjective_onto_spinor_kernel ? l2 : l1);
      return c;
    }
    const auto s12 = verify_strong_approximation(form, gens, crt_product(r1, r2), options);
    c.order12 = s12.reached;
    c.kernel12 = s12.reached_kernel;
    c.holds = c.kernel12 == c.kernel1 * c.kernel2;
  } catch (const Error& e) {
    c.skipped = true;
    c.diagnostic = e.what();
  }
  return c;
}

}  // namespace clab

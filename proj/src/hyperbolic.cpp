#include "clab/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

#include "clab/detail/packed_set.hpp"

namespace clab {

ArchimedeanEmbedding::ArchimedeanEmbedding(const QuadraticForm& form, bool conjugate_place)
    : field_(form.field()), conjugate_(conjugate_place) {
  if (conjugate_place && form.field().is_rational()) fail(ErrorKind::kPrecondition, "Q has a single real place");
  const auto m = static_cast<Eigen::Index>(form.dim());
  const auto flat = form.gram_real(conjugate_place);
  const Eigen::MatrixXd g = Eigen::Map<const Eigen::MatrixXd>(flat.data(), m, m);

  bool diagonal = true;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) diagonal = diagonal && (i == j || g(i, j) == 0.0);

  d_ = Eigen::MatrixXd::Zero(m, m);
  j_ = Eigen::MatrixXd::Identity(m, m);
  if (diagonal && (conjugate_place || g(m - 1, m - 1) < 0)) {
    for (Eigen::Index i = 0; i < m; ++i) {
      d_(i, i) = std::sqrt(std::abs(g(i, i)));
      if (g(i, i) < 0) j_(i, i) = -1.0;
    }
  } else {
    // Positive directions first, the negative one last.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = m - 1; i >= 0; --i) order.push_back(i);  // descending
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r)];
      Eigen::VectorXd q = es.eigenvectors().col(i);
      Eigen::Index arg;
      q.cwiseAbs().maxCoeff(&arg);
      if (q(arg) < 0) q = -q;
      const double lam = es.eigenvalues()(i);
      d_.row(r) = std::sqrt(std::abs(lam)) * q.transpose();
      if (lam < 0) j_(r, r) = -1.0;
    }
  }
  if ((d_.transpose() * j_ * d_ - g).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff()))
    fail(ErrorKind::kNumerical, "embedding conjugator does not reproduce the form");
  d_inv_ = d_.inverse();
}

Eigen::MatrixXd ArchimedeanEmbedding::to_real(const ExactMatrix& g) const {
  const ExactRing ring(field_);
  const auto m = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd r(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      r(i, j) = ring.to_real(g(static_cast<std::size_t>(i), static_cast<std::size_t>(j)), conjugate_);
  return r;
}

Eigen::MatrixXd ArchimedeanEmbedding::embed(const ExactMatrix& g) const { return embed_real(to_real(g)); }

double ArchimedeanEmbedding::form_residual(const Eigen::MatrixXd& e) const {
  return (e.transpose() * j_ * e - j_).cwiseAbs().maxCoeff();
}

double displacement(const Eigen::MatrixXd& embedded) {
  const double c = embedded(embedded.rows() - 1, embedded.cols() - 1);
  if (!(c >= 1.0 - 1e-9)) fail(ErrorKind::kNumerical, "bottom-right entry " + std::to_string(c) + " is below 1");
  return std::acosh(std::max(1.0, c));
}

namespace {

using Entry = BasicRingElement<std::int64_t>;

// Exact matrices over O_F with checked 64-bit coefficients, stored as int32
// words (a, or a and b) for deduplication.
class ExactOps {
 public:
  ExactOps(const QuadraticForm& form) : ring_(form.field()), dim_(form.dim()), quad_(!form.field().is_rational()) {}

  std::size_t entries() const { return dim_ * dim_; }
  std::size_t words() const { return entries() * (quad_ ? 2 : 1); }

  std::vector<Entry> from_exact(const ExactMatrix& m) const {
    std::vector<Entry> out;
    for (const auto& x : m.data()) {
      if (x.a > std::numeric_limits<std::int64_t>::max() || x.a < std::numeric_limits<std::int64_t>::min() ||
          x.b > std::numeric_limits<std::int64_t>::max() || x.b < std::numeric_limits<std::int64_t>::min())
        fail(ErrorKind::kOverflow, "generator entry exceeds 64 bits");
      out.push_back({static_cast<std::int64_t>(x.a), static_cast<std::int64_t>(x.b)});
    }
    return out;
  }

  void mul(const Entry* x, const Entry* y, Entry* out) const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        Entry s{};
        for (std::size_t k = 0; k < dim_; ++k) {
          const Entry& a = x[i * dim_ + k];
          if (a.a == 0 && a.b == 0) continue;
          s = ring_.add(s, ring_.mul(a, y[k * dim_ + j]));
        }
        out[i * dim_ + j] = s;
      }
  }

  void pack(const Entry* x, std::int32_t* out) const {
    for (std::size_t i = 0; i < entries(); ++i) {
      if (x[i].a > INT32_MAX || x[i].a < INT32_MIN || x[i].b > INT32_MAX || x[i].b < INT32_MIN)
        fail(ErrorKind::kOverflow, "matrix entry exceeds the 32-bit storage range");
      if (quad_) {
        out[2 * i] = static_cast<std::int32_t>(x[i].a);
        out[2 * i + 1] = static_cast<std::int32_t>(x[i].b);
      } else {
        out[i] = static_cast<std::int32_t>(x[i].a);
      }
    }
  }

  void unpack(const std::int32_t* w, Entry* out) const {
    for (std::size_t i = 0; i < entries(); ++i) out[i] = quad_ ? Entry{w[2 * i], w[2 * i + 1]} : Entry{w[i], 0};
  }

  const IntegralRing<std::int64_t>& ring() const { return ring_; }
  std::size_t dim() const { return dim_; }

 private:
  IntegralRing<std::int64_t> ring_;
  std::size_t dim_;
  bool quad_;
};

}  // namespace

CountResult count_ball(const QuadraticForm& form, const std::vector<ExactMatrix>& gens, const std::vector<double>& radii,
                       const CountOptions& options) {
  if (radii.empty()) fail(ErrorKind::kPrecondition, "count_ball needs at least one radius");
  for (double t : radii)
    if (t < 0) fail(ErrorKind::kPrecondition, "radii must be nonnegative");
  if (options.margin < 0) fail(ErrorKind::kPrecondition, "margin must be nonnegative");
  const double t_max = *std::max_element(radii.begin(), radii.end());
  const double horizon = t_max + options.margin;

  const ArchimedeanEmbedding emb(form);
  const ExactOps ops(form);
  const std::size_t m = form.dim();
  const std::size_t ne = ops.entries();
  const ExactRing exact(form.field());

  // cosh d(o, g o) = u^t g v with u = row m-1 of D, v = column m-1 of D^{-1}.
  const Eigen::VectorXd u = emb.conjugator().row(static_cast<Eigen::Index>(m - 1)).transpose();
  const Eigen::VectorXd v = emb.conjugator().inverse().col(static_cast<Eigen::Index>(m - 1));
  const double w_real = form.field().omega_real(false);
  const auto dist = [&](const Entry* g) {
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const Entry& x = g[i * m + j];
        row += (static_cast<double>(x.a) + static_cast<double>(x.b) * w_real) * v(static_cast<Eigen::Index>(j));
      }
      c += u(static_cast<Eigen::Index>(i)) * row;
    }
    if (!(c >= 1.0 - 1e-9)) fail(ErrorKind::kNumerical, "element does not preserve the upper sheet");
    return std::acosh(std::max(1.0, c));
  };

  // S and S^{-1}; inverses via adjugate (det = 1).
  std::vector<std::vector<Entry>> steps;
  for (const auto& g : gens) {
    if (!is_special_orthogonal(exact, g, form.gram())) fail(ErrorKind::kPrecondition, "generator is not in SO(q, O_F)");
    steps.push_back(ops.from_exact(g));
    steps.push_back(ops.from_exact(adjugate(exact, g)));
  }
  // gamma^{-1} = G^{-1} gamma^t G = adj(G) gamma^t G / det(G), for the inverse-closure check.
  const auto gram_adj = ops.from_exact(adjugate(exact, form.gram()));
  const auto gram = ops.from_exact(form.gram());
  const Entry gram_det = ops.from_exact(ExactMatrix(1, {determinant(exact, form.gram())}))[0];

  std::vector<ResidueMatrix> filter_ids;
  for (const auto& r : options.filters) filter_ids.push_back(identity(r, m));

  CountResult res;
  res.full.level = "full";
  res.full.radii = radii;
  res.full.counts.assign(radii.size(), 0);
  for (const auto& r : options.filters) res.filtered.push_back({r.describe(), radii, std::vector<std::uint64_t>(radii.size(), 0), {}});

  detail::PackedSet<std::int32_t> seen(ops.words());
  std::vector<float> popped_at;  // displacement once popped, -1 before
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

  std::vector<Entry> cur(ne), next(ne);
  std::vector<std::int32_t> packed(ops.words());
  ops.pack(ops.from_exact(identity(exact, m)).data(), packed.data());
  seen.insert(packed.data());
  popped_at.push_back(-1.0f);
  heap.emplace(0.0, 0);

  res.certified_radius = horizon;
  while (!heap.empty()) {
    const auto [d, id] = heap.top();
    heap.pop();
    popped_at[id] = static_cast<float>(d);
    ++res.explored;
    ops.unpack(seen.get(id), cur.data());

    for (std::size_t i = 0; i < radii.size(); ++i)
      if (d <= radii[i] + 1e-9) ++res.full.counts[i];
    if (!options.filters.empty() || options.coset_ring) {
      for (std::size_t f = 0; f < options.filters.size(); ++f) {
        const ResidueRing& r = options.filters[f];
        ResidueMatrix red(m);
        for (std::size_t k = 0; k < ne; ++k) red.data()[k] = r.reduce(cur[k]);
        if (red == filter_ids[f])
          for (std::size_t i = 0; i < radii.size(); ++i)
            if (d <= radii[i] + 1e-9) ++res.filtered[f].counts[i];
      }
      if (options.coset_ring && d <= t_max + 1e-9) {
        std::vector<std::uint32_t> key;
        for (std::size_t k = 0; k < ne; ++k) {
          const Residue x = options.coset_ring->reduce(cur[k]);
          key.push_back(x.a);
          key.push_back(x.b);
        }
        res.cosets[key].push_back(d);
      }
    }

    bool stop = false;
    for (const auto& s : steps) {
      ops.mul(s.data(), cur.data(), next.data());
      const double dn = dist(next.data());
      if (dn > horizon + 1e-9) continue;
      ops.pack(next.data(), packed.data());
      if (seen.size() >= options.node_budget && !seen.find(packed.data())) {
        stop = true;
        break;
      }
      const auto [nid, inserted] = seen.insert(packed.data());
      if (inserted) {
        popped_at.push_back(-1.0f);
        heap.emplace(dn, nid);
      }
    }
    if (stop) {
      // Paths through this node and beyond are incomplete.
      res.budget_hit = true;
      res.certified_radius = d;
      break;
    }
  }

  for (std::size_t i = 0; i < radii.size(); ++i) {
    const bool sat = radii[i] + options.margin <= res.certified_radius + 1e-12;
    res.full.saturated.push_back(sat);
    for (auto& f : res.filtered) f.saturated.push_back(sat);
  }

  if (options.check_inverses) {
    double t_sat = -1.0;
    for (std::size_t i = 0; i < radii.size(); ++i)
      if (res.full.saturated[i]) t_sat = std::max(t_sat, radii[i]);
    std::vector<Entry> tmp(ne), inv(ne), gt(ne);
    for (std::size_t id = 0; id < seen.size() && t_sat >= 0; ++id) {
      if (popped_at[id] < 0 || popped_at[id] > t_sat - 1e-6) continue;
      ops.unpack(seen.get(id), cur.data());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gt[i * m + j] = cur[j * m + i];
      ops.mul(gt.data(), gram.data(), tmp.data());
      ops.mul(gram_adj.data(), tmp.data(), inv.data());
      for (auto& x : inv) x = ops.ring().divide_exact(x, gram_det);
      ops.pack(inv.data(), packed.data());
      const auto hit = seen.find(packed.data());
      if (!hit || popped_at[*hit] < 0 || std::abs(popped_at[*hit] - popped_at[id]) > 1e-4)
        fail(ErrorKind::kNumerical, "inverse of a counted element is missing from the ball");
      ++res.inverse_checks;
    }
  }
  return res;
}

GrowthFit growth_exponent(const CountSeries& series, std::uint64_t min_count, std::size_t min_points) {
  GrowthFit out;
  std::vector<double> ys;
  for (std::size_t i = 0; i < series.radii.size(); ++i) {
    if (!series.saturated[i] || series.counts[i] < min_count) continue;
    out.radii_used.push_back(series.radii[i]);
    ys.push_back(std::log(static_cast<double>(series.counts[i])));
  }
  if (out.radii_used.size() < std::max<std::size_t>(min_points, 2))
    fail(ErrorKind::kPrecondition, "growth fit needs " + std::to_string(min_points) + " saturated points with N >= " +
                                       std::to_string(min_count) + ", have " + std::to_string(out.radii_used.size()));
  out.fit = fit_line(out.radii_used, ys);
  return out;
}

void write_count_csv(const std::vector<CountSeries>& series, std::ostream& os) {
  os << "T,count,saturated,level\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.radii.size(); ++i)
      os << s.radii[i] << ',' << s.counts[i] << ',' << (s.saturated[i] ? "true" : "false") << ',' << s.level << '\n';
}

}  // namespace clab

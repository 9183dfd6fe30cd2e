#include "clab/cayley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "clab/fit.hpp"

namespace clab {

namespace {

using Triplet = Eigen::Triplet<double>;

CayleyGraph finish(std::size_t n, std::vector<Triplet>& trips, std::string level) {
  CayleyGraph g;
  g.vertices = n;
  g.level = std::move(level);
  g.adjacency.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  g.adjacency.setFromTriplets(trips.begin(), trips.end());  // duplicates are summed
  g.adjacency.makeCompressed();
  Eigen::VectorXd rows = g.adjacency * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  g.degree = n ? rows.maxCoeff() : 0.0;
  g.regular = n == 0 || (rows.array() == g.degree).all();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> t = g.adjacency.transpose();
  if (Eigen::SparseMatrix<double, Eigen::RowMajor>(g.adjacency - t).norm() != 0.0)
    fail(ErrorKind::kNumerical, "adjacency is not symmetric");
  return g;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

CayleyGraph build_cayley(const QuotientTable& table) {
  if (!table.closed()) fail(ErrorKind::kPrecondition, "Cayley graph needs a closed quotient table");
  if (!table.has_edges() && table.generator_count() > 0)
    fail(ErrorKind::kPrecondition, "quotient table was enumerated without edges");
  const std::size_t n = table.size();
  std::vector<Triplet> trips;
  trips.reserve(n * table.generator_count() * 2);
  for (std::size_t g = 0; g < table.generator_count(); ++g) {
    // s is an involution iff s*s = 1, i.e. the edge from the identity returns.
    const bool involution = table.edge(table.edge(0, g), g) == 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (involution) {
        trips.emplace_back(i, table.edge(i, g), 2.0);
      } else {
        trips.emplace_back(i, table.edge(i, g), 1.0);
        trips.emplace_back(i, table.inverse_edge(i, g), 1.0);
      }
    }
  }
  CayleyGraph g = finish(n, trips, table.ring().describe());
  if (!g.regular) fail(ErrorKind::kNumerical, "Cayley graph is not regular");
  return g;
}

CayleyGraph graph_from_edges(std::size_t vertices, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<Triplet> trips;
  for (auto [u, v] : edges) {
    if (u >= vertices || v >= vertices) fail(ErrorKind::kPrecondition, "edge endpoint out of range");
    trips.emplace_back(u, v, 1.0);
    if (u != v) trips.emplace_back(v, u, 1.0);
  }
  return finish(vertices, trips, "edge list");
}

std::size_t connected_components(const CayleyGraph& g) {
  UnionFind uf(g.vertices);
  std::size_t comps = g.vertices;
  for (Eigen::Index r = 0; r < g.adjacency.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g.adjacency, r); it; ++it)
      if (uf.unite(static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()))) --comps;
  return comps;
}

void write_edge_list(const CayleyGraph& g, std::ostream& os) {
  for (Eigen::Index r = 0; r < g.adjacency.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g.adjacency, r); it; ++it)
      if (r <= it.col()) os << r << ' ' << it.col() << '\n';
}

std::vector<Cluster> cluster_eigenvalues(const std::vector<double>& descending, double tolerance) {
  std::vector<Cluster> out;
  for (double v : descending) {
    if (!out.empty() && std::abs(out.back().value - v) <= tolerance) {
      ++out.back().multiplicity;
    } else {
      out.push_back({v, 1});
    }
  }
  return out;
}

namespace {

struct KrylovResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // matching columns
  double max_residual = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

// Restarted block Krylov with full reorthogonalization and Rayleigh-Ritz on
// the largest eigenvalues of a symmetric operator. The block size exceeds the
// requested count so that repeated eigenvalues inside the window are resolved.
template <class Op>
KrylovResult top_eigenpairs(const Op& op, Eigen::Index n, std::size_t want, const SpectrumOptions& opt) {
  const Eigen::Index b = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(want + 4));
  // Keep the basis under ~1.5e8 doubles.
  const Eigen::Index max_blocks = std::clamp<Eigen::Index>(150'000'000 / std::max<Eigen::Index>(1, n * b), 3, 24);
  const Eigen::Index m = std::min<Eigen::Index>(n, b * max_blocks);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  const auto random_block = [&](Eigen::Index cols) {
    Eigen::MatrixXd x(n, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
    return x;
  };

  KrylovResult res;
  Eigen::MatrixXd x = random_block(b);
  Eigen::MatrixXd basis(n, m), image(n, m);
  for (std::size_t restart = 0; restart < opt.max_restarts; ++restart) {
    Eigen::Index filled = 0;
    Eigen::MatrixXd block = x;
    while (filled < m) {
      const Eigen::Index take = std::min<Eigen::Index>(block.cols(), m - filled);
      block.conservativeResize(Eigen::NoChange, take);
      for (int pass = 0; pass < 2; ++pass) {
        if (filled > 0) block -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * block);
      }
      // Orthonormalize within the block; replace collapsed directions.
      for (Eigen::Index j = 0; j < take; ++j) {
        for (int attempt = 0; attempt < 3; ++attempt) {
          Eigen::VectorXd v = block.col(j);
          for (int pass = 0; pass < 2; ++pass) {
            if (filled > 0) v -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * v);
            if (j > 0) v -= block.leftCols(j) * (block.leftCols(j).transpose() * v);
          }
          const double nv = v.norm();
          if (nv > 1e-10) {
            block.col(j) = v / nv;
            break;
          }
          block.col(j) = random_block(1);
          if (attempt == 2) block.col(j).setZero();
        }
      }
      basis.middleCols(filled, take) = block;
      image.middleCols(filled, take) = op(block);
      block = image.middleCols(filled, take);
      filled += take;
    }
    ++res.iterations;
    Eigen::MatrixXd h = basis.transpose() * image;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    // ascending -> take the top b
    Eigen::MatrixXd y = es.eigenvectors().rightCols(b).rowwise().reverse();
    Eigen::VectorXd theta = es.eigenvalues().tail(b).reverse();
    Eigen::MatrixXd u = basis * y;
    Eigen::MatrixXd au = image * y;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(want) && j < b; ++j)
      worst = std::max(worst, (au.col(j) - theta(j) * u.col(j)).norm());
    res.values = theta.head(std::min<Eigen::Index>(b, static_cast<Eigen::Index>(want)));
    res.vectors = u.leftCols(res.values.size());
    res.max_residual = worst;
    if (worst <= opt.solver_tolerance || m == n) {
      res.converged = true;
      break;
    }
    x = u;
  }
  return res;
}

}  // namespace

SpectralReport spectrum(const CayleyGraph& g, const SpectrumOptions& options) {
  SpectralReport rep;
  rep.mode = options.mode;
  rep.vertices = g.vertices;
  rep.degree = g.degree;
  const auto n = static_cast<Eigen::Index>(g.vertices);
  if (n == 0) fail(ErrorKind::kPrecondition, "empty graph");

  std::vector<double> top;  // descending, used for clustering
  Eigen::MatrixXd top_vectors;
  if (options.mode == SpectrumMode::kFull) {
    if (g.vertices > 20000) fail(ErrorKind::kPrecondition, "full spectrum is limited to 20000 vertices");
    const Eigen::MatrixXd dense = Eigen::MatrixXd(g.adjacency);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        dense, options.want_fiedler ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail(ErrorKind::kNumerical, "dense eigensolver failed");
    for (Eigen::Index i = n - 1; i >= 0; --i) top.push_back(es.eigenvalues()(i));
    rep.eigenvalues = top;
    if (options.want_fiedler) top_vectors = es.eigenvectors().rowwise().reverse();
    const double trace = dense.trace();
    const double sum = std::accumulate(top.begin(), top.end(), 0.0);
    if (std::abs(sum - trace) > 1e-6 * static_cast<double>(g.vertices))
      fail(ErrorKind::kNumerical, "eigenvalue sum does not match the trace");
  } else {
    const auto& a = g.adjacency;
    const std::size_t want = std::min<std::size_t>(options.window, g.vertices);
    auto hi = top_eigenpairs([&](const Eigen::MatrixXd& x) { return Eigen::MatrixXd(a * x); }, n, want, options);
    auto lo = top_eigenpairs([&](const Eigen::MatrixXd& x) { return Eigen::MatrixXd(-(a * x)); }, n, want, options);
    rep.converged = hi.converged && lo.converged;
    rep.max_residual = std::max(hi.max_residual, lo.max_residual);
    rep.iterations = hi.iterations + lo.iterations;
    for (Eigen::Index i = 0; i < hi.values.size(); ++i) top.push_back(hi.values(i));
    top_vectors = hi.vectors;
    rep.eigenvalues = top;
    for (Eigen::Index i = lo.values.size() - 1; i >= 0; --i) rep.eigenvalues.push_back(-lo.values(i));
  }

  rep.clusters = cluster_eigenvalues(top, options.cluster_tolerance);
  rep.lambda_min = *std::min_element(rep.eigenvalues.begin(), rep.eigenvalues.end());
  const Cluster& perron = rep.clusters.front();
  if (std::abs(perron.value - g.degree) > 1e-6 * std::max(1.0, g.degree) && g.regular)
    fail(ErrorKind::kNumerical, "top eigenvalue differs from the degree");
  rep.perron_multiplicity = perron.multiplicity;
  rep.lambda2 = rep.clusters.size() > 1 ? rep.clusters[1].value : perron.value;
  if (rep.perron_multiplicity > 1) rep.lambda2 = perron.value;
  rep.normalized_gap = g.degree > 0 ? 1.0 - rep.lambda2 / g.degree : 0.0;

  std::size_t last = rep.clusters.size();
  if (options.mode == SpectrumMode::kWindowed && last > 2) --last;  // possibly cut by the window edge
  rep.min_nontrivial_multiplicity = 0;
  for (std::size_t i = 1; i < last; ++i)
    if (rep.min_nontrivial_multiplicity == 0 || rep.clusters[i].multiplicity < rep.min_nontrivial_multiplicity)
      rep.min_nontrivial_multiplicity = rep.clusters[i].multiplicity;

  if (options.want_fiedler && top_vectors.cols() > 0) {
    // First vector after the Perron cluster; with a disconnected graph take a
    // vector inside the Perron space orthogonal to constants.
    const Eigen::Index idx = static_cast<Eigen::Index>(std::min<std::size_t>(
        rep.perron_multiplicity > 1 ? 0 : rep.perron_multiplicity, static_cast<std::size_t>(top_vectors.cols() - 1)));
    Eigen::VectorXd f = top_vectors.col(idx);
    if (rep.perron_multiplicity > 1) {
      // combine the Perron-space vectors to kill the constant component
      Eigen::VectorXd ones = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
      Eigen::VectorXd best = f - ones * ones.dot(f);
      for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(rep.perron_multiplicity) && j < top_vectors.cols(); ++j) {
        Eigen::VectorXd c = top_vectors.col(j) - ones * ones.dot(top_vectors.col(j));
        if (c.norm() > best.norm()) best = c;
      }
      f = best;
    }
    rep.fiedler.assign(f.data(), f.data() + f.size());
  }
  return rep;
}

MultiplicityFloorReport multiplicity_floor_report(const std::vector<MultiplicityLevel>& levels) {
  if (levels.size() < 3) fail(ErrorKind::kPrecondition, "multiplicity floor report needs at least three levels");
  MultiplicityFloorReport rep;
  std::vector<double> xs, ys;
  for (const auto& lv : levels) {
    MultiplicityFloorReport::Row row{lv.field_order, lv.report.min_nontrivial_multiplicity, true, ""};
    if (lv.report.perron_multiplicity > 1) {
      row.included = false;
      row.note = "disconnected: Perron multiplicity " + std::to_string(lv.report.perron_multiplicity);
    } else if (row.floor == 0) {
      row.included = false;
      row.note = "no non-Perron cluster";
    }
    if (row.included) {
      xs.push_back(std::log(static_cast<double>(lv.field_order)));
      ys.push_back(std::log(static_cast<double>(row.floor)));
    }
    rep.rows.push_back(row);
  }
  rep.fitted = xs.size();
  if (xs.size() < 2) fail(ErrorKind::kPrecondition, "fewer than two usable levels");
  const LinearFit f = fit_line(xs, ys);
  rep.slope = f.slope;
  rep.slope_band = f.slope_band;
  return rep;
}

namespace {

ExpansionBounds exact_expansion(const CayleyGraph& g, NeighborConvention conv) {
  const std::size_t n = g.vertices;
  std::vector<std::uint32_t> nbr(n, 0);
  for (Eigen::Index r = 0; r < g.adjacency.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g.adjacency, r); it; ++it)
      nbr[static_cast<std::size_t>(r)] |= 1u << it.col();
  const std::uint32_t total = n == 32 ? 0xffffffffu : ((1u << n) - 1);
  // reach[mask] = union of neighbourhoods, built from mask without its low bit
  std::vector<std::uint32_t> reach(std::size_t{1} << n, 0);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask <= total && mask != 0; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    reach[mask] = reach[mask & (mask - 1)] | nbr[static_cast<std::size_t>(std::countr_zero(low))];
    const auto w = static_cast<std::size_t>(std::popcount(mask));
    if (2 * w >= n) continue;
    const std::uint32_t nb = conv == NeighborConvention::kExclusive ? (reach[mask] & ~mask) : reach[mask];
    best = std::min(best, static_cast<double>(std::popcount(nb)) / static_cast<double>(w));
    if (mask == total) break;
  }
  if (!std::isfinite(best)) best = 0.0;  // no admissible W (|V| <= 2)
  return {best, best, ExpansionMethod::kExact};
}

// Best |N(W)|/|W| over prefixes of an ordering, |W| < |V|/2.
double sweep(const CayleyGraph& g, const std::vector<std::size_t>& order, NeighborConvention conv) {
  const std::size_t n = g.vertices;
  std::vector<std::uint32_t> touching(n, 0);
  std::vector<char> in(n, 0);
  std::size_t boundary = 0, reached_inside = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * (k + 1) < n; ++k) {
    const std::size_t u = order[k];
    if (touching[u] > 0) {
      --boundary;
      ++reached_inside;
    }
    in[u] = 1;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g.adjacency, static_cast<Eigen::Index>(u)); it;
         ++it) {
      const auto v = static_cast<std::size_t>(it.col());
      if (touching[v]++ == 0) {
        if (in[v]) {
          ++reached_inside;
        } else {
          ++boundary;
        }
      }
    }
    const double size = conv == NeighborConvention::kExclusive ? static_cast<double>(boundary)
                                                               : static_cast<double>(boundary + reached_inside);
    best = std::min(best, size / static_cast<double>(k + 1));
  }
  return best;
}

}  // namespace

ExpansionBounds expansion_bounds(const CayleyGraph& g, NeighborConvention conv, bool force_spectral) {
  if (g.vertices <= 24 && !force_spectral) {
    ExpansionBounds exact = exact_expansion(g, conv);
    return exact;
  }
  SpectrumOptions opt;
  opt.want_fiedler = true;
  opt.mode = g.vertices <= 2000 ? SpectrumMode::kFull : SpectrumMode::kWindowed;
  const SpectralReport rep = spectrum(g, opt);
  ExpansionBounds b;
  b.method = ExpansionMethod::kCheeger;
  b.lower = g.degree > 0 ? std::max(0.0, (g.degree - rep.lambda2) / (2.0 * g.degree)) : 0.0;

  std::vector<std::size_t> order(g.vertices);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return rep.fiedler[a] < rep.fiedler[c]; });
  double up = sweep(g, order, conv);
  std::reverse(order.begin(), order.end());
  up = std::min(up, sweep(g, order, conv));
  // A small component is an exact witness of zero expansion.
  if (conv == NeighborConvention::kExclusive && rep.perron_multiplicity > 1) {
    UnionFind uf(g.vertices);
    for (Eigen::Index r = 0; r < g.adjacency.outerSize(); ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g.adjacency, r); it; ++it)
        uf.unite(static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()));
    std::vector<std::size_t> sizes(g.vertices, 0);
    for (std::size_t v = 0; v < g.vertices; ++v) ++sizes[uf.find(v)];
    for (std::size_t s : sizes)
      if (s > 0 && 2 * s < g.vertices) up = 0.0;
  }
  b.upper = std::isfinite(up) ? up : b.lower;
  if (b.upper < b.lower) b.upper = b.lower;
  return b;
}

ExpanderFamilyReport expander_family_report(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                            const std::vector<std::int64_t>& primes, const ExpanderOptions& options) {
  ExpanderFamilyReport rep;
  double running = std::numeric_limits<double>::infinity();
  for (std::int64_t p : primes) {
    ExpanderRow row;
    row.prime = p;
    try {
      const ResidueRing ring = make_residue_ring(form.field(), p, 1);
      row.field_order = static_cast<std::int64_t>(ring.cardinality());
      EnumerateOptions eo = options.enumerate;
      eo.store_edges = true;
      const QuotientTable t = enumerate_quotient(form, gens, ring, eo);
      if (!t.closed()) {
        row.note = "budget exceeded";
      } else {
        const CayleyGraph g = build_cayley(t);
        SpectrumOptions so = options.spectrum;
        so.mode = g.vertices <= options.full_limit ? SpectrumMode::kFull : SpectrumMode::kWindowed;
        const SpectralReport s = spectrum(g, so);
        row.vertices = g.vertices;
        row.degree = g.degree;
        row.lambda2 = s.lambda2;
        row.normalized_gap = s.normalized_gap;
        row.expansion_lower = g.degree > 0 ? (g.degree - s.lambda2) / (2.0 * g.degree) : 0.0;
        row.ok = s.converged;
        if (!s.converged) row.note = "solver residual " + std::to_string(s.max_residual);
      }
    } catch (const Error& e) {
      row.note = e.what();
    }
    if (row.ok) running = std::min(running, row.normalized_gap);
    rep.running_min_gap.push_back(std::isfinite(running) ? running : 0.0);
    rep.rows.push_back(row);
  }
  rep.min_gap = std::isfinite(running) ? running : 0.0;
  return rep;
}

}  // namespace clab

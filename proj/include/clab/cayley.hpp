#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "clab/quotient.hpp"

namespace clab {

// Weighted undirected graph in compressed row form. Cayley graphs are
// k-regular: vertex i is joined to i*s for s in S and S^{-1}; an involution
// contributes one edge of weight 2.
struct CayleyGraph {
  std::size_t vertices = 0;
  double degree = 0.0;  // row sum, equal for every vertex when regular
  bool regular = true;
  std::string level;
  Eigen::SparseMatrix<double, Eigen::RowMajor> adjacency;
};

CayleyGraph build_cayley(const QuotientTable& table);
// Plain undirected graph from an edge list (used for non-Cayley test graphs).
CayleyGraph graph_from_edges(std::size_t vertices, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

// Number of connected components (union-find over the stored edges).
std::size_t connected_components(const CayleyGraph& g);

// One line "u v" per distinct undirected edge, u <= v, zero-based.
void write_edge_list(const CayleyGraph& g, std::ostream& os);

enum class SpectrumMode { kFull, kWindowed };

struct SpectrumOptions {
  SpectrumMode mode = SpectrumMode::kFull;
  std::size_t window = 8;            // eigenvalues at each end in windowed mode
  double solver_tolerance = 1e-8;    // residual bound ||Au - theta u||
  double cluster_tolerance = 1e-6;
  std::uint64_t seed = 20240611;
  std::size_t max_restarts = 400;
  bool want_fiedler = false;         // keep an eigenvector for lambda_2
};

struct Cluster {
  double value;
  std::size_t multiplicity;
};

struct SpectralReport {
  SpectrumMode mode = SpectrumMode::kFull;
  std::size_t vertices = 0;
  double degree = 0.0;
  std::vector<double> eigenvalues;  // descending; in windowed mode top then bottom window
  std::vector<Cluster> clusters;    // descending; windowed: top window only
  double lambda2 = 0.0;             // largest eigenvalue after the Perron cluster
  double lambda_min = 0.0;          // smallest computed eigenvalue
  double normalized_gap = 0.0;      // 1 - lambda2 / k
  std::size_t perron_multiplicity = 0;
  // Smallest multiplicity among non-Perron clusters. Windowed mode only sees
  // the top window; its last cluster may be truncated and is skipped.
  std::size_t min_nontrivial_multiplicity = 0;
  bool converged = true;
  double max_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> fiedler;  // when requested
};

SpectralReport spectrum(const CayleyGraph& g, const SpectrumOptions& options = {});

std::vector<Cluster> cluster_eigenvalues(const std::vector<double>& descending, double tolerance);

struct MultiplicityLevel {
  std::int64_t field_order;  // |k_P|
  SpectralReport report;
};

struct MultiplicityFloorReport {
  struct Row {
    std::int64_t field_order;
    std::size_t floor;
    bool included;
    std::string note;
  };
  std::vector<Row> rows;
  double slope = 0.0;
  double slope_band = 0.0;
  std::size_t fitted = 0;
};

// Needs at least three levels; disconnected levels are flagged and excluded.
MultiplicityFloorReport multiplicity_floor_report(const std::vector<MultiplicityLevel>& levels);

enum class NeighborConvention { kExclusive, kInclusive };
enum class ExpansionMethod { kExact, kCheeger };

struct ExpansionBounds {
  double lower = 0.0;
  double upper = 0.0;
  ExpansionMethod method = ExpansionMethod::kExact;
};

// c(H) = min over nonempty W with |W| < |V|/2 of |N(W)| / |W|. Exact by
// subset enumeration up to 24 vertices; otherwise the spectral lower bound
// (k - lambda_2)/(2k) and the best sweep cut along a lambda_2 eigenvector.
ExpansionBounds expansion_bounds(const CayleyGraph& g, NeighborConvention conv = NeighborConvention::kExclusive,
                                 bool force_spectral = false);

struct ExpanderRow {
  std::int64_t prime = 0;
  std::int64_t field_order = 0;
  std::size_t vertices = 0;
  double degree = 0.0;
  double lambda2 = 0.0;
  double normalized_gap = 0.0;
  double expansion_lower = 0.0;
  bool ok = false;
  std::string note;
};

struct ExpanderFamilyReport {
  std::vector<ExpanderRow> rows;
  std::vector<double> running_min_gap;
  double min_gap = 0.0;
};

struct ExpanderOptions {
  EnumerateOptions enumerate;
  // Dense solve up to this many vertices, windowed above.
  std::size_t full_limit = 2000;
  SpectrumOptions spectrum;
};

ExpanderFamilyReport expander_family_report(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                            const std::vector<std::int64_t>& primes,
                                            const ExpanderOptions& options = {});

}  // namespace clab

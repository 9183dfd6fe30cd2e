#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clab/fit.hpp"
#include "clab/qform.hpp"

namespace clab {

// Real conjugator D with G = D^t J D, J = diag(1, ..., 1, -1) at the fixed
// place (J = I at the conjugate place of a quadratic field, where the form is
// definite). Then D g D^{-1} preserves J for every g preserving G.
class ArchimedeanEmbedding {
 public:
  explicit ArchimedeanEmbedding(const QuadraticForm& form, bool conjugate_place = false);

  Eigen::MatrixXd embed(const ExactMatrix& g) const;
  Eigen::MatrixXd embed_real(const Eigen::MatrixXd& g) const { return d_ * g * d_inv_; }
  // Real matrix of an exact element at this place, before conjugation.
  Eigen::MatrixXd to_real(const ExactMatrix& g) const;
  // ||E^t J E - J||_max for an embedded matrix.
  double form_residual(const Eigen::MatrixXd& e) const;
  const Eigen::MatrixXd& conjugator() const { return d_; }
  const Eigen::MatrixXd& target() const { return j_; }
  bool conjugate_place() const { return conjugate_; }

 private:
  FieldSpec field_;
  bool conjugate_;
  Eigen::MatrixXd d_, d_inv_, j_;
};

// d(o, g o) with o = (0, ..., 0, 1): arccosh of the bottom-right entry.
double displacement(const Eigen::MatrixXd& embedded);

struct CountOptions {
  double margin = 2.0;
  std::uint64_t node_budget = 20'000'000;
  // Congruence filters: counts of elements congruent to I mod each ring.
  std::vector<ResidueRing> filters;
  bool check_inverses = true;
  // Keep (displacement, reduction class) per counted element for coset
  // partitions; only for small searches.
  std::optional<ResidueRing> coset_ring;
};

struct CountSeries {
  std::string level;  // "full" or the filter ring
  std::vector<double> radii;
  std::vector<std::uint64_t> counts;
  std::vector<bool> saturated;
};

struct CountResult {
  CountSeries full;
  std::vector<CountSeries> filtered;
  // Every element reachable through elements of displacement < this radius
  // was explored.
  double certified_radius = 0.0;
  std::uint64_t explored = 0;
  bool budget_hit = false;
  std::uint64_t inverse_checks = 0;
  // coset class (packed reduction) -> displacements, when requested
  std::map<std::vector<std::uint32_t>, std::vector<double>> cosets;
};

// Best-first search over left multiplication by S and S^{-1}, keyed by
// displacement, exploring elements with displacement <= max(radii) + margin.
// Elements are deduplicated exactly (checked 64-bit arithmetic in O_F). A
// radius T is saturated when T + margin <= certified radius.
CountResult count_ball(const QuadraticForm& form, const std::vector<ExactMatrix>& gens, const std::vector<double>& radii,
                       const CountOptions& options = {});

struct GrowthFit {
  LinearFit fit;
  std::vector<double> radii_used;
};

// Slope of log N against T over saturated entries with N >= min_count; needs
// at least min_points of them.
GrowthFit growth_exponent(const CountSeries& series, std::uint64_t min_count = 50, std::size_t min_points = 5);

void write_count_csv(const std::vector<CountSeries>& series, std::ostream& os);

}  // namespace clab

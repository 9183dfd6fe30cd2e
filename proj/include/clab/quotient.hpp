#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clab/qform.hpp"

namespace clab {

struct EnumerateOptions {
  std::uint64_t element_budget = 5'000'000;
  bool store_edges = true;
  // Check M^t G M = G and det M = 1 for every new element.
  bool verify_elements = true;
};

// Lambda / Lambda(I) as the BFS closure of the reduced generators under right
// multiplication. Element 0 is the identity; ids follow discovery order with
// generators tried in their given order.
class QuotientTable {
 public:
  const ResidueRing& ring() const { return ring_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return count_; }
  std::size_t generator_count() const { return std::max(gens_.size(), edges_.size()); }
  const std::vector<ResidueMatrix>& generators() const { return gens_; }
  const ResidueMatrix& gram() const { return gram_; }
  bool closed() const { return closed_; }
  bool has_edges() const { return !edges_.empty(); }

  ResidueMatrix element(std::size_t id) const;
  std::optional<std::uint32_t> find(const ResidueMatrix& m) const;
  // id of element(id) * gens[g], and of element(id) * gens[g]^{-1}.
  std::uint32_t edge(std::size_t id, std::size_t g) const { return edges_[g][id]; }
  std::uint32_t inverse_edge(std::size_t id, std::size_t g) const { return inverse_edges_[g][id]; }
  // BFS depth = word length in the generators (not their inverses).
  std::uint16_t depth(std::size_t id) const { return depth_[id]; }
  // Spinor class bits (one per CRT factor) propagated along the BFS tree.
  std::uint8_t spinor_bits(std::size_t id) const { return spinor_[id]; }
  std::uint8_t generator_spinor_bits(std::size_t g) const { return gen_spinor_[g]; }

  // Byte-stable binary form (ids included).
  void serialize(std::ostream& os) const;
  static QuotientTable deserialize(std::istream& is);

  // A table built directly from a permutation action, for synthetic graphs
  // (e.g. Z/m with +-1). Elements are stored as 1x1 matrices holding the id.
  static QuotientTable from_permutations(const std::vector<std::vector<std::uint32_t>>& perms);

  QuotientTable(const QuotientTable&) = delete;
  QuotientTable& operator=(const QuotientTable&) = delete;
  QuotientTable(QuotientTable&&) noexcept;
  QuotientTable& operator=(QuotientTable&&) noexcept;
  ~QuotientTable();

 private:
  friend QuotientTable enumerate_quotient(const QuadraticForm&, const std::vector<ExactMatrix>&, const ResidueRing&,
                                          const EnumerateOptions&);
  friend QuotientTable enumerate_quotient(const std::vector<ResidueMatrix>&, const ResidueMatrix&,
                                          const ResidueRing&, const EnumerateOptions&);
  explicit QuotientTable(ResidueRing ring);

  struct Store;
  ResidueRing ring_;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  bool closed_ = false;
  ResidueMatrix gram_;
  std::vector<ResidueMatrix> gens_;
  std::vector<std::uint8_t> gen_spinor_;
  std::unique_ptr<Store> store_;
  std::vector<std::vector<std::uint32_t>> edges_;
  std::vector<std::vector<std::uint32_t>> inverse_edges_;
  std::vector<std::uint16_t> depth_;
  std::vector<std::uint8_t> spinor_;
};

// Fails with kPrecondition on a generator that is not special orthogonal mod
// the ring. If the budget is hit the returned table is partial, closed() is
// false and no edges are stored.
QuotientTable enumerate_quotient(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                 const ResidueRing& ring, const EnumerateOptions& options = {});
QuotientTable enumerate_quotient(const std::vector<ResidueMatrix>& gens, const ResidueMatrix& gram,
                                 const ResidueRing& ring, const EnumerateOptions& options = {});

struct StrongApproxReport {
  bool closed = false;
  bool surjective_onto_spinor_kernel = false;
  BigInt reached;         // |<gens>|
  BigInt reached_kernel;  // |<gens> cap ker SN|
  BigInt target;          // |ker SN| over the ring
  BigInt ambient;         // |SO| over the ring
  BigInt index_defect;    // target / reached_kernel
  // Distinct spinor classes (bitmasks) met by the group; its size is
  // reached / reached_kernel.
  std::vector<std::uint8_t> spinor_image;
  std::vector<std::uint8_t> generator_classes;
  // Propagated classes agreed with a direct decomposition on a sample.
  std::size_t spinor_checks = 0;
};

StrongApproxReport verify_strong_approximation(const QuadraticForm& form, const QuotientTable& table);
StrongApproxReport verify_strong_approximation(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                               const ResidueRing& ring, const EnumerateOptions& options = {});

struct LevelRow {
  std::int64_t prime = 0;
  int exponent = 1;
  BigInt ring_size;  // |O_F / I|
  BigInt order;
  bool closed = false;
  std::string note;
};

struct OrderScalingReport {
  std::vector<LevelRow> rows;
  // Least-squares slope of log order against log |O_F/I| over closed
  // exponent-1 rows.
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  std::size_t fitted_points = 0;
  struct Ladder {
    std::int64_t prime;
    int from;
    BigInt ratio;  // |G(l^{r+1})| / |G(l^r)|, exact
    bool exact_division;
  };
  std::vector<Ladder> ladders;
};

struct Level {
  std::int64_t prime;
  int exponent = 1;
};

// Fit and ladders over rows computed elsewhere.
OrderScalingReport summarize_orders(std::vector<LevelRow> rows);
OrderScalingReport order_scaling_report(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                        const std::vector<Level>& levels, const EnumerateOptions& options = {});

struct CrtCheck {
  bool skipped = false;
  std::string diagnostic;
  BigInt kernel1, kernel2, kernel12;  // spinor-kernel parts
  BigInt order1, order2, order12;
  bool holds = false;  // kernel12 == kernel1 * kernel2
};

CrtCheck crt_product_check(const QuadraticForm& form, const std::vector<ExactMatrix>& gens, std::int64_t l1,
                           std::int64_t l2, const EnumerateOptions& options = {});

}  // namespace clab

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clab/qform.hpp"
#include "clab/quotient.hpp"

namespace clab {

struct SpectrumConfig {
  std::string mode = "auto";  // "full", "windowed", or "auto" (full up to full_limit)
  std::size_t full_limit = 2000;
  std::size_t window = 8;
  std::size_t max_vertices = 200'000;  // larger quotients get no spectrum row
  double cluster_tolerance = 1e-6;
  std::uint64_t seed = 20240611;
};

struct CountConfig {
  std::vector<double> radii;
  double margin = 0.5;
  std::uint64_t node_budget = 2'000'000;
  std::vector<std::int64_t> filters;  // primes; elements congruent to I mod each
  bool check_inverses = true;
  std::uint64_t min_count = 50;
  std::size_t min_points = 5;
};

struct SphericalConfig {
  int n = 2;
  std::vector<double> s = {1.8, 1.9};
  std::vector<double> T = {4, 5, 6, 7, 8, 9, 10};
  double r_max = 20.0;
  double step = 0.01;
};

struct ThresholdConfig {
  std::vector<int> n = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
};

struct RunConfig {
  std::string name = "run";
  std::optional<std::string> preset;
  FieldSpec field = FieldSpec::rational();
  ExactMatrix gram;
  std::vector<ExactMatrix> generators;
  std::vector<Level> levels;
  std::vector<std::pair<std::int64_t, std::int64_t>> crt_pairs;
  std::uint64_t element_budget = 5'000'000;
  std::uint64_t memory_mb = 4096;
  SpectrumConfig spectrum;
  CountConfig count;
  SphericalConfig spherical;
  ThresholdConfig thresholds;
  std::string output_dir = "out";
  std::string cache_dir = "cache";
};

// Structural errors (missing or mistyped fields) raise kValidation with the
// offending field path in the message. Mathematical checks live in validate().
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Canonical JSON of everything that affects results (paths excluded).
nlohmann::json canonical_json(const RunConfig& cfg);
// Hex SHA-256 of the canonical JSON dump.
std::string config_hash(const RunConfig& cfg);
std::string sha256_hex(const std::string& bytes);

struct Finding {
  enum class Severity { kError, kWarning };
  Severity severity;
  std::string field;
  std::string message;
};

std::vector<Finding> validate(const RunConfig& cfg);
bool has_errors(const std::vector<Finding>& findings);
nlohmann::json findings_json(const std::vector<Finding>& findings);

// Throws kValidation naming the field of the first hard failure.
QuadraticForm build_form(const RunConfig& cfg);

// Element budget after applying the memory cap to a table with `dim` x `dim`
// entries of the given ring degree.
std::uint64_t effective_element_budget(const RunConfig& cfg, std::size_t dim, int degree, std::size_t generators);

// Exact values as JSON: ring elements as integers or [a, b], big integers as
// decimal strings when they exceed 53 bits.
nlohmann::json to_json(const RingElement& x);
nlohmann::json to_json(const ExactMatrix& m);
nlohmann::json big_to_json(const BigInt& x);

}  // namespace clab

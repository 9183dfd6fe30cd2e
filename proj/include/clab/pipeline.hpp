#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clab/config.hpp"
#include "clab/quotient.hpp"

namespace clab {

struct RunOptions {
  std::string out_dir;    // overrides the config when nonempty
  std::string cache_dir;  // likewise
  unsigned threads = 1;
  bool use_cache = true;
};

enum ExitCode : int { kExitOk = 0, kExitStageFailed = 1, kExitValidation = 2, kExitBudget = 3 };

struct StageResult {
  std::string name;
  std::string status = "ok";  // ok | skipped | failed | budget
  double seconds = 0.0;
  std::vector<std::string> files;
  std::vector<std::string> cache_hits;
  std::string message;
};

struct PipelineReport {
  std::string subcommand;
  std::string config_hash;
  std::vector<nlohmann::json> findings;
  std::vector<StageResult> stages;
  int exit_code = kExitOk;
};

// Subcommands: quotient, spectrum, count, spherical, thresholds, pipeline.
// Writes one JSON per stage (plus CSV series) and report.json to the output
// directory; all writes go through a temporary file and a rename.
PipelineReport run(const std::string& subcommand, const RunConfig& cfg, const RunOptions& options = {});

// Quotient tables persisted under the cache directory, keyed by the SHA-256
// of (form, generators, ring, budget, edge flag). The sidecar JSON holds the
// full key, which must match exactly for a hit.
class QuotientCache {
 public:
  explicit QuotientCache(std::string dir, bool enabled = true) : dir_(std::move(dir)), enabled_(enabled) {}
  // Returns the table and whether it came from disk.
  std::pair<QuotientTable, bool> get(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                     const ResidueRing& ring, const EnumerateOptions& options) const;
  static std::string key_material(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                  const ResidueRing& ring, const EnumerateOptions& options);

 private:
  std::string dir_;
  bool enabled_;
};

void write_file_atomic(const std::string& path, const std::string& contents);

nlohmann::json rational_json(const boost::multiprecision::cpp_rational& r);

}  // namespace clab

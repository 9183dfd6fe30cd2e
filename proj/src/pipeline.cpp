#include "clab/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "clab/cayley.hpp"
#include "clab/hyperbolic.hpp"
#include "clab/spherical.hpp"

namespace clab {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

json rational_json(const boost::multiprecision::cpp_rational& r) {
  return {{"num", big_to_json(boost::multiprecision::numerator(r))},
          {"den", big_to_json(boost::multiprecision::denominator(r))}};
}

std::string QuotientCache::key_material(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                        const ResidueRing& ring, const EnumerateOptions& options) {
  json k;
  k["form"] = form.encode();
  k["generators"] = json::array();
  for (const auto& g : gens) k["generators"].push_back(to_json(g));
  k["ring"] = ring.describe();
  k["element_budget"] = options.element_budget;
  k["edges"] = options.store_edges;
  return k.dump();
}

std::pair<QuotientTable, bool> QuotientCache::get(const QuadraticForm& form, const std::vector<ExactMatrix>& gens,
                                                  const ResidueRing& ring, const EnumerateOptions& options) const {
  const std::string key = key_material(form, gens, ring, options);
  const std::string hash = sha256_hex(key);
  const fs::path blob = fs::path(dir_) / (hash + ".qt");
  const fs::path side = fs::path(dir_) / (hash + ".json");
  if (enabled_ && fs::exists(blob) && fs::exists(side)) {
    std::ifstream sin(side);
    json sj;
    try {
      sin >> sj;
    } catch (const json::exception&) {
      sj = json();
    }
    if (sj.is_object() && sj.value("key", std::string()) == key) {
      std::ifstream in(blob, std::ios::binary);
      try {
        return {QuotientTable::deserialize(in), true};
      } catch (const Error&) {
        // corrupt entry: recompute and overwrite
      }
    }
  }
  QuotientTable t = enumerate_quotient(form, gens, ring, options);
  if (enabled_ && t.closed()) {
    std::ostringstream os;
    t.serialize(os);
    write_file_atomic(blob.string(), os.str());
    write_file_atomic(side.string(), json{{"key", key}, {"size", t.size()}}.dump(2) + "\n");
  }
  return {std::move(t), false};
}

namespace {

// Runs f(i) for i in [0, n) on up to `threads` workers; results are stored by
// index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Context {
  const RunConfig& cfg;
  const QuadraticForm& form;
  std::string hash;
  fs::path out;
  QuotientCache cache;
  unsigned threads;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(StageResult& st, const Context& cx, const std::string& name, const std::string& contents) {
  write_file_atomic((cx.out / name).string(), contents);
  st.files.push_back(name);
}

EnumerateOptions enum_options(const Context& cx, const ResidueRing& ring, bool edges) {
  EnumerateOptions o;
  o.store_edges = edges;
  o.element_budget = effective_element_budget(cx.cfg, cx.form.dim(), ring.degree(), edges ? cx.cfg.generators.size() : 0);
  return o;
}

json sa_json(const StrongApproxReport& r) {
  json img = json::array(), gc = json::array();
  for (auto b : r.spinor_image) img.push_back(b);
  for (auto b : r.generator_classes) gc.push_back(b);
  return {{"closed", r.closed},
          {"order", big_to_json(r.reached)},
          {"kernel_order", big_to_json(r.reached_kernel)},
          {"spinor_kernel_order", big_to_json(r.target)},
          {"special_orthogonal_order", big_to_json(r.ambient)},
          {"index_defect", big_to_json(r.index_defect)},
          {"surjective_onto_spinor_kernel", r.surjective_onto_spinor_kernel},
          {"spinor_image", img},
          {"generator_classes", gc},
          {"spinor_checks", r.spinor_checks}};
}

void stage_quotient(const Context& cx, StageResult& st) {
  const auto& levels = cx.cfg.levels;
  std::vector<json> rows(levels.size());
  std::vector<LevelRow> orders(levels.size());
  std::vector<int> surjective(levels.size(), -1);
  std::vector<std::string> hits(levels.size());
  bool budget = false;
  std::mutex mu;
  parallel_for(levels.size(), cx.threads, [&](std::size_t i) {
    const Level& lv = levels[i];
    const ResidueRing ring = make_residue_ring(cx.form.field(), lv.prime, lv.exponent);
    auto [table, hit] = cx.cache.get(cx.form, cx.cfg.generators, ring, enum_options(cx, ring, false));
    json row = {{"prime", lv.prime}, {"exponent", lv.exponent}, {"ring", ring.describe()},
                {"ring_size", big_to_json(BigInt(ring.cardinality()))}};
    LevelRow lr{lv.prime, lv.exponent, BigInt(ring.cardinality()), BigInt(table.size()), table.closed(), ""};
    if (table.closed() && lv.exponent == 1) {
      const StrongApproxReport sa = verify_strong_approximation(cx.form, table);
      row["strong_approximation"] = sa_json(sa);
      surjective[i] = sa.surjective_onto_spinor_kernel ? 1 : 0;
    }
    row["order"] = big_to_json(BigInt(table.size()));
    row["closed"] = table.closed();
    if (!table.closed()) lr.note = "budget exceeded; partial order";
    std::lock_guard lock(mu);
    if (!table.closed()) budget = true;
    if (hit) hits[i] = ring.describe();
    rows[i] = std::move(row);
    orders[i] = lr;
  });
  for (auto& h : hits)
    if (!h.empty()) st.cache_hits.push_back(h);

  json j;
  j["config_hash"] = cx.hash;
  j["levels"] = rows;
  const OrderScalingReport sc = summarize_orders(orders);
  json ladders = json::array();
  for (const auto& l : sc.ladders)
    ladders.push_back({{"prime", l.prime}, {"from_exponent", l.from}, {"ratio", big_to_json(l.ratio)},
                       {"exact_division", l.exact_division}});
  j["scaling"] = {{"exponent", sc.exponent}, {"exponent_stderr", sc.exponent_stderr},
                  {"fitted_points", sc.fitted_points}, {"ladders", ladders}};
  json crt = json::array();
  for (const auto& [a, b] : cx.cfg.crt_pairs) {
    const CrtCheck c = crt_product_check(cx.form, cx.cfg.generators, a, b,
                                         enum_options(cx, make_residue_ring(cx.form.field(), a, 1), false));
    crt.push_back({{"primes", {a, b}}, {"skipped", c.skipped}, {"diagnostic", c.diagnostic},
                   {"kernel", {big_to_json(c.kernel1), big_to_json(c.kernel2), big_to_json(c.kernel12)}},
                   {"order", {big_to_json(c.order1), big_to_json(c.order2), big_to_json(c.order12)}},
                   {"holds", c.holds}});
  }
  j["crt"] = crt;
  std::vector<Finding> density;
  std::size_t failures = 0;
  for (int s : surjective) failures += s == 0;
  if (failures >= 2)
    density.push_back({Finding::Severity::kWarning, "levels",
                       "not surjective onto the spinor kernel at " + std::to_string(failures) +
                           " primes: Zariski density is suspect"});
  j["findings"] = findings_json(density);
  emit(st, cx, "quotient.json", dump(j));
  if (budget) {
    st.status = "budget";
    st.message = "element budget exceeded; partial orders in quotient.json";
  }
}

void stage_spectrum(const Context& cx, StageResult& st) {
  const auto& cfg = cx.cfg;
  json rows = json::array();
  std::vector<MultiplicityLevel> mult;
  std::ostringstream csv;
  csv << "prime,vertices,degree,lambda2,normalized_gap,running_min_gap\n";
  csv.precision(12);
  double running = std::numeric_limits<double>::infinity();
  bool budget = false;
  for (const Level& lv : cfg.levels) {
    const ResidueRing ring = make_residue_ring(cx.form.field(), lv.prime, lv.exponent);
    auto [table, hit] = cx.cache.get(cx.form, cfg.generators, ring, enum_options(cx, ring, true));
    if (hit) st.cache_hits.push_back(ring.describe() + " (edges)");
    json row = {{"prime", lv.prime}, {"exponent", lv.exponent}, {"ring", ring.describe()}};
    if (!table.closed()) {
      budget = true;
      row["note"] = "element budget exceeded";
      rows.push_back(row);
      continue;
    }
    if (table.size() > cfg.spectrum.max_vertices) {
      row["vertices"] = table.size();
      row["note"] = "skipped: more than spectrum.max_vertices vertices";
      rows.push_back(row);
      continue;
    }
    const CayleyGraph g = build_cayley(table);
    SpectrumOptions so;
    so.window = cfg.spectrum.window;
    so.cluster_tolerance = cfg.spectrum.cluster_tolerance;
    so.seed = cfg.spectrum.seed;
    so.mode = cfg.spectrum.mode == "full" ? SpectrumMode::kFull
              : cfg.spectrum.mode == "windowed" ? SpectrumMode::kWindowed
              : (g.vertices <= cfg.spectrum.full_limit ? SpectrumMode::kFull : SpectrumMode::kWindowed);
    const SpectralReport s = spectrum(g, so);
    json clusters = json::array();
    for (std::size_t c = 0; c < s.clusters.size() && c < 12; ++c)
      clusters.push_back({{"value", s.clusters[c].value}, {"multiplicity", s.clusters[c].multiplicity}});
    row.update({{"vertices", g.vertices},
                {"degree", g.degree},
                {"mode", s.mode == SpectrumMode::kFull ? "full" : "windowed"},
                {"lambda2", s.lambda2},
                {"lambda_min", s.lambda_min},
                {"normalized_gap", s.normalized_gap},
                {"perron_multiplicity", s.perron_multiplicity},
                {"min_nontrivial_multiplicity", s.min_nontrivial_multiplicity},
                {"converged", s.converged},
                {"max_residual", s.max_residual},
                {"top_clusters", clusters}});
    if (g.vertices <= 24) {
      const ExpansionBounds b = expansion_bounds(g);
      row["expansion"] = {{"lower", b.lower}, {"upper", b.upper}, {"method", "exact"}};
    } else {
      row["expansion"] = {{"lower", std::max(0.0, (g.degree - s.lambda2) / (2 * g.degree))}, {"method", "cheeger"}};
    }
    if (!s.converged) st.status = "failed", st.message = "eigensolver did not converge at " + ring.describe();
    running = std::min(running, s.normalized_gap);
    csv << lv.prime << ',' << g.vertices << ',' << g.degree << ',' << s.lambda2 << ',' << s.normalized_gap << ','
        << running << '\n';
    if (lv.exponent == 1 && ring.is_field()) mult.push_back({static_cast<std::int64_t>(ring.cardinality()), s});
    rows.push_back(row);
  }
  json j;
  j["config_hash"] = cx.hash;
  j["levels"] = rows;
  j["min_normalized_gap"] = std::isfinite(running) ? json(running) : json(nullptr);
  if (mult.size() >= 3) {
    try {
      const MultiplicityFloorReport m = multiplicity_floor_report(mult);
      json mr = json::array();
      for (const auto& r : m.rows)
        mr.push_back({{"field_order", r.field_order}, {"floor", r.floor}, {"included", r.included}, {"note", r.note}});
      j["multiplicity_floor"] = {{"rows", mr}, {"slope", m.slope}, {"slope_band", m.slope_band}, {"fitted", m.fitted}};
    } catch (const Error& e) {
      j["multiplicity_floor"] = {{"error", e.what()}};
    }
  }
  emit(st, cx, "spectrum.json", dump(j));
  emit(st, cx, "spectrum.csv", csv.str());
  if (budget && st.status == "ok") {
    st.status = "budget";
    st.message = "element budget exceeded at some level";
  }
}

void stage_count(const Context& cx, StageResult& st) {
  const auto& cfg = cx.cfg;
  if (cfg.count.radii.empty()) {
    st.status = "skipped";
    st.message = "no count.radii configured";
    return;
  }
  CountOptions o;
  o.margin = cfg.count.margin;
  o.node_budget = cfg.count.node_budget;
  o.check_inverses = cfg.count.check_inverses;
  for (std::int64_t p : cfg.count.filters) o.filters.push_back(make_residue_ring(cx.form.field(), p, 1));
  const CountResult r = count_ball(cx.form, cfg.generators, cfg.count.radii, o);

  const auto fit_json = [&](const CountSeries& s) -> json {
    try {
      const GrowthFit g = growth_exponent(s, cfg.count.min_count, cfg.count.min_points);
      return {{"slope", g.fit.slope}, {"slope_band", g.fit.slope_band}, {"r_squared", g.fit.r_squared},
              {"radii_used", g.radii_used}};
    } catch (const Error& e) {
      return {{"error", e.what()}};
    }
  };
  const auto series_json = [&](const CountSeries& s) -> json {
    return {{"level", s.level}, {"radii", s.radii}, {"counts", s.counts}, {"saturated", s.saturated},
            {"growth", fit_json(s)}};
  };
  json j;
  j["config_hash"] = cx.hash;
  j["full"] = series_json(r.full);
  j["filtered"] = json::array();
  std::optional<std::size_t> last_sat;
  for (std::size_t i = 0; i < r.full.radii.size(); ++i)
    if (r.full.saturated[i] && (!last_sat || r.full.radii[i] > r.full.radii[*last_sat])) last_sat = i;
  for (std::size_t f = 0; f < r.filtered.size(); ++f) {
    json fj = series_json(r.filtered[f]);
    const ResidueRing& ring = o.filters[f];
    auto [table, hit] = cx.cache.get(cx.form, cfg.generators, ring, enum_options(cx, ring, false));
    if (hit) st.cache_hits.push_back(ring.describe());
    if (table.closed() && last_sat && r.full.counts[*last_sat] > 0) {
      const double observed =
          static_cast<double>(r.filtered[f].counts[*last_sat]) / static_cast<double>(r.full.counts[*last_sat]);
      const double expected = 1.0 / static_cast<double>(table.size());
      fj["thinning"] = {{"T", r.full.radii[*last_sat]}, {"quotient_order", table.size()}, {"observed", observed},
                        {"expected", expected}, {"ratio", observed / expected}};
    }
    j["filtered"].push_back(fj);
  }
  j["certified_radius"] = r.certified_radius;
  j["explored"] = r.explored;
  j["budget_hit"] = r.budget_hit;
  j["inverse_checks"] = r.inverse_checks;
  j["margin"] = o.margin;
  std::vector<CountSeries> all{r.full};
  all.insert(all.end(), r.filtered.begin(), r.filtered.end());
  std::ostringstream csv;
  csv.precision(12);
  write_count_csv(all, csv);
  emit(st, cx, "count.json", dump(j));
  emit(st, cx, "count.csv", csv.str());
  if (r.budget_hit) {
    bool any_unsat = false;
    for (bool b : r.full.saturated) any_unsat = any_unsat || !b;
    if (any_unsat) {
      st.status = "budget";
      st.message = "node budget reached; radii above " + std::to_string(r.certified_radius - o.margin) +
                   " are unsaturated (see count.json)";
    }
  }
}

std::string number_tag(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void stage_spherical(const Context& cx, StageResult& st) {
  const auto& sc = cx.cfg.spherical;
  json j;
  j["config_hash"] = cx.hash;
  j["n"] = sc.n;
  j["results"] = json::array();
  bool ok = true;
  for (double s : sc.s) {
    json e;
    e["s"] = s;
    const SphericalTable t = phi(sc.n, s, sc.r_max, sc.step);
    std::ostringstream csv;
    write_phi_csv(t, csv);
    const std::string name = "phi_n" + std::to_string(sc.n) + "_s" + number_tag(s) + ".csv";
    emit(st, cx, name, csv.str());
    e["table"] = {{"file", name}, {"points", t.r.size()}, {"max_residual", t.max_residual},
                  {"refinement_change", t.refinement_change}};
    ok = ok && t.max_residual < 1e-8;
    if (sc.n == 2 && s != 1.0) {
      double dev = 0.0;
      for (std::size_t k = 1; k < t.r.size(); ++k)
        dev = std::max(dev, std::abs(t.phi[k] - std::sinh((s - 1) * t.r[k]) / ((s - 1) * std::sinh(t.r[k]))));
      e["closed_form_deviation"] = dev;
    }
    if (sc.r_max >= 4) {
      const LinearFit f = phi_decay_fit(sc.n, s, sc.r_max / 2, sc.r_max);
      e["decay"] = {{"slope", f.slope}, {"expected", s - sc.n}};
    }
    if (sc.T.size() >= 2) {
      const TransformGrowthReport g = transform_growth(sc.n, s, sc.T);
      e["transform"] = {{"slope", g.fit.slope}, {"expected", g.expected}, {"rel_deviation", g.rel_deviation},
                        {"max_homomorphism_error", g.max_homomorphism_error}};
      const KernelReport k = kernel_diagonal_check(sc.n, s, sc.T);
      json rows = json::array();
      for (const auto& r : k.rows) {
        json row = {{"T", r.T}, {"diagonal", r.diagonal}, {"c_estimate", r.c_estimate}};
        if (r.reconstructed)
          row.update({{"profile_bound", r.profile_bound}, {"tail", r.tail}, {"most_negative", r.most_negative}});
        rows.push_back(row);
      }
      e["kernel"] = {{"slope", k.fit.slope}, {"expected", k.expected}, {"rel_deviation", k.rel_deviation},
                     {"c_ratio", k.c_ratio}, {"profile_ratio", k.profile_ratio}, {"inconclusive", k.inconclusive},
                     {"passed", k.passed}, {"rows", rows}};
      ok = ok && k.passed;
      if (sc.n == 2) {
        std::ostringstream kc;
        write_kernel_csv(kernel_profile_h3(s, sc.T.back()), kc);
        const std::string kn = "kernel_s" + number_tag(s) + "_T" + number_tag(sc.T.back()) + ".csv";
        emit(st, cx, kn, kc.str());
      }
    }
    j["results"].push_back(e);
  }
  emit(st, cx, "spherical.json", dump(j));
  if (!ok) {
    st.status = "failed";
    st.message = "a spherical check failed (see spherical.json)";
  }
}

void stage_thresholds(const Context& cx, StageResult& st) {
  json j;
  j["config_hash"] = cx.hash;
  j["thresholds"] = json::array();
  bool ok = true;
  for (int n : cx.cfg.thresholds.n) {
    const ThresholdReport c = critical_threshold(n);
    const ThresholdReport k = keystone_threshold(n, n - 1, n, n - 1);
    ok = ok && c.s0 == k.s0;
    j["thresholds"].push_back({{"n", n},
                               {"s0", rational_json(c.s0)},
                               {"lambda0", rational_json(c.lambda0)},
                               {"keystone_s0", rational_json(k.s0)},
                               {"multiplicity_exponent", rational_json(k.multiplicity_exponent)},
                               {"count_main_exponent", rational_json(k.count_main_exponent)},
                               {"count_error_exponent", rational_json(k.count_error_exponent)},
                               {"t_coefficient", rational_json(k.t_coefficient)},
                               {"consistent", c.s0 == k.s0}});
  }
  emit(st, cx, "thresholds.json", dump(j));
  if (!ok) {
    st.status = "failed";
    st.message = "keystone and critical thresholds disagree";
  }
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

PipelineReport run(const std::string& subcommand, const RunConfig& cfg, const RunOptions& options) {
  static const std::vector<std::string> kStages = {"quotient", "spectrum", "count", "spherical", "thresholds"};
  std::vector<std::string> stages;
  if (subcommand == "pipeline")
    stages = kStages;
  else if (std::find(kStages.begin(), kStages.end(), subcommand) != kStages.end())
    stages = {subcommand};
  else
    fail(ErrorKind::kPrecondition, "unknown subcommand '" + subcommand + "'");

  PipelineReport rep;
  rep.subcommand = subcommand;
  rep.config_hash = config_hash(cfg);
  const auto findings = validate(cfg);
  for (const auto& f : findings_json(findings)) rep.findings.push_back(f);
  const fs::path out = options.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(options.out_dir);
  const std::string cache_dir = options.cache_dir.empty() ? cfg.cache_dir : options.cache_dir;

  const auto write_report = [&] {
    json stages_j = json::array(), run_j = json::array();
    for (const auto& s : rep.stages) {
      json files = json::array();
      for (const auto& f : s.files) {
        std::ifstream in(out / f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        files.push_back({{"file", f}, {"sha256", sha256_hex(buf.str())}});
      }
      stages_j.push_back({{"name", s.name}, {"status", s.status}, {"files", files}, {"message", s.message}});
      run_j.push_back({{"name", s.name}, {"seconds", s.seconds}, {"cache_hits", s.cache_hits}});
    }
    // Everything outside "run" is deterministic given the config.
    const json j = {{"subcommand", rep.subcommand}, {"config_hash", rep.config_hash}, {"config", canonical_json(cfg)},
                    {"findings", rep.findings}, {"stages", stages_j}, {"exit_code", rep.exit_code},
                    {"run", {{"generated_at", timestamp()}, {"stages", run_j}}}};
    write_file_atomic((out / "report.json").string(), dump(j));
  };

  if (has_errors(findings)) {
    rep.exit_code = kExitValidation;
    write_report();
    return rep;
  }
  const QuadraticForm form = build_form(cfg);
  const Context cx{cfg, form, rep.config_hash, out, QuotientCache(cache_dir, options.use_cache),
                   std::max(1u, options.threads)};

  for (const auto& name : stages) {
    StageResult st;
    st.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (name == "quotient") stage_quotient(cx, st);
      if (name == "spectrum") stage_spectrum(cx, st);
      if (name == "count") stage_count(cx, st);
      if (name == "spherical") stage_spherical(cx, st);
      if (name == "thresholds") stage_thresholds(cx, st);
    } catch (const Error& e) {
      st.status = e.kind() == ErrorKind::kBudgetExceeded ? "budget" : "failed";
      st.message = e.what();
    } catch (const std::exception& e) {
      st.status = "failed";
      st.message = e.what();
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (st.status == "budget" && rep.exit_code == kExitOk) rep.exit_code = kExitBudget;
    if (st.status == "failed" && rep.exit_code != kExitBudget) rep.exit_code = kExitStageFailed;
    rep.stages.push_back(std::move(st));
  }
  write_report();
  return rep;
}

}  // namespace clab

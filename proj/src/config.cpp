#include "clab/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "clab/presets.hpp"

namespace clab {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::kValidation, "config field '" + field + "': " + what);
}

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    bad(field, e.what());
  }
}

RingElement parse_element(const json& j, const std::string& field) {
  if (j.is_number_integer()) return {BigInt(j.get<std::int64_t>()), 0};
  if (j.is_string()) return {BigInt(j.get<std::string>()), 0};
  if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer())
    return {BigInt(j[0].get<std::int64_t>()), BigInt(j[1].get<std::int64_t>())};
  bad(field, "expected an integer or [a, b] for a + b*w");
}

ExactMatrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad(field, "expected a nonempty square matrix (list of rows)");
  const std::size_t n = j.size();
  ExactMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != n) bad(row, "row length must be " + std::to_string(n));
    for (std::size_t k = 0; k < n; ++k) m(i, k) = parse_element(j[i][k], row + "[" + std::to_string(k) + "]");
  }
  return m;
}

FieldSpec parse_field(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "Q" || s == "rational") return FieldSpec::rational();
    bad("field", "unknown field '" + s + "'");
  }
  if (j.is_object() && j.contains("d")) {
    try {
      return FieldSpec::quadratic(get_as<std::int64_t>(j.at("d"), "field.d"));
    } catch (const Error& e) {
      bad("field", e.what());
    }
  }
  bad("field", "expected \"Q\" or {\"d\": <square-free d>}");
}

std::vector<double> parse_radii(const json& j, const std::string& field) {
  if (j.is_array()) return get_as<std::vector<double>>(j, field);
  if (j.is_object()) {
    const double lo = j.value("min", 0.0);
    const double hi = get_as<double>(j.at("max"), field + ".max");
    const double step = get_as<double>(j.at("step"), field + ".step");
    if (!(step > 0) || hi < lo) bad(field, "need step > 0 and max >= min");
    std::vector<double> out;
    for (long k = 0;; ++k) {
      const double t = lo + static_cast<double>(k) * step;
      if (t > hi + 1e-9) break;
      out.push_back(t);
    }
    return out;
  }
  bad(field, "expected a list or {min, max, step}");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad(where.empty() ? key : where + "." + key, "unknown field");
  }
}

}  // namespace

json to_json(const RingElement& x) {
  const auto small = [](const BigInt& v) -> json {
    if (v >= -(BigInt(1) << 53) && v <= (BigInt(1) << 53)) return static_cast<std::int64_t>(v);
    return v.str();
  };
  if (x.b == 0) return small(x.a);
  return json::array({small(x.a), small(x.b)});
}

json to_json(const ExactMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.size(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

json big_to_json(const BigInt& x) { return to_json(RingElement{x, 0}); }

RunConfig parse_config(const json& j) {
  if (!j.is_object()) bad("<root>", "expected a JSON object");
  check_keys(j, "", {"name", "preset", "field", "form", "generators", "levels", "crt", "budgets", "spectrum", "count",
                     "spherical", "thresholds", "output", "cache"});
  RunConfig c;
  if (j.contains("name")) c.name = get_as<std::string>(j["name"], "name");
  if (j.contains("preset")) {
    const auto name = get_as<std::string>(j["preset"], "preset");
    try {
      const Preset p = preset_by_name(name);
      c.preset = name;
      c.field = p.form.field();
      c.gram = p.form.gram();
      c.generators = p.generators;
    } catch (const Error& e) {
      bad("preset", e.what());
    }
  }
  if (j.contains("field")) c.field = parse_field(j["field"]);
  if (j.contains("form")) c.gram = parse_matrix(j["form"], "form");
  if (j.contains("generators")) {
    const json& g = j["generators"];
    if (!g.is_array()) bad("generators", "expected a list of matrices");
    c.generators.clear();
    for (std::size_t i = 0; i < g.size(); ++i)
      c.generators.push_back(parse_matrix(g[i], "generators[" + std::to_string(i) + "]"));
  }
  if (c.gram.size() == 0) bad("form", "missing (give a form or a preset)");

  if (j.contains("levels")) {
    const json& l = j["levels"];
    if (!l.is_array()) bad("levels", "expected a list");
    for (std::size_t i = 0; i < l.size(); ++i) {
      const std::string f = "levels[" + std::to_string(i) + "]";
      if (l[i].is_number_integer()) {
        c.levels.push_back({l[i].get<std::int64_t>(), 1});
      } else if (l[i].is_object()) {
        c.levels.push_back({get_as<std::int64_t>(l[i].at("prime"), f + ".prime"),
                            l[i].contains("exponent") ? get_as<int>(l[i]["exponent"], f + ".exponent") : 1});
      } else {
        bad(f, "expected a prime or {\"prime\": p, \"exponent\": r}");
      }
    }
  }
  if (j.contains("crt")) {
    for (const auto& p : get_as<std::vector<std::vector<std::int64_t>>>(j["crt"], "crt")) {
      if (p.size() != 2) bad("crt", "each entry is a pair of primes");
      c.crt_pairs.emplace_back(p[0], p[1]);
    }
  }
  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    check_keys(b, "budgets", {"elements", "memory_mb", "count_nodes"});
    if (b.contains("elements")) c.element_budget = get_as<std::uint64_t>(b["elements"], "budgets.elements");
    if (b.contains("memory_mb")) c.memory_mb = get_as<std::uint64_t>(b["memory_mb"], "budgets.memory_mb");
    if (b.contains("count_nodes")) c.count.node_budget = get_as<std::uint64_t>(b["count_nodes"], "budgets.count_nodes");
  }
  if (j.contains("spectrum")) {
    const json& s = j["spectrum"];
    check_keys(s, "spectrum", {"mode", "full_limit", "window", "max_vertices", "cluster_tolerance", "seed"});
    if (s.contains("mode")) c.spectrum.mode = get_as<std::string>(s["mode"], "spectrum.mode");
    if (c.spectrum.mode != "auto" && c.spectrum.mode != "full" && c.spectrum.mode != "windowed")
      bad("spectrum.mode", "expected auto, full or windowed");
    if (s.contains("full_limit")) c.spectrum.full_limit = get_as<std::size_t>(s["full_limit"], "spectrum.full_limit");
    if (s.contains("window")) c.spectrum.window = get_as<std::size_t>(s["window"], "spectrum.window");
    if (s.contains("max_vertices"))
      c.spectrum.max_vertices = get_as<std::size_t>(s["max_vertices"], "spectrum.max_vertices");
    if (s.contains("cluster_tolerance"))
      c.spectrum.cluster_tolerance = get_as<double>(s["cluster_tolerance"], "spectrum.cluster_tolerance");
    if (s.contains("seed")) c.spectrum.seed = get_as<std::uint64_t>(s["seed"], "spectrum.seed");
  }
  if (j.contains("count")) {
    const json& s = j["count"];
    check_keys(s, "count", {"radii", "margin", "filters", "check_inverses", "min_count", "min_points"});
    if (s.contains("radii")) c.count.radii = parse_radii(s["radii"], "count.radii");
    if (s.contains("margin")) c.count.margin = get_as<double>(s["margin"], "count.margin");
    if (s.contains("filters")) c.count.filters = get_as<std::vector<std::int64_t>>(s["filters"], "count.filters");
    if (s.contains("check_inverses")) c.count.check_inverses = get_as<bool>(s["check_inverses"], "count.check_inverses");
    if (s.contains("min_count")) c.count.min_count = get_as<std::uint64_t>(s["min_count"], "count.min_count");
    if (s.contains("min_points")) c.count.min_points = get_as<std::size_t>(s["min_points"], "count.min_points");
  }
  if (j.contains("spherical")) {
    const json& s = j["spherical"];
    check_keys(s, "spherical", {"n", "s", "T", "r_max", "step"});
    if (s.contains("n")) c.spherical.n = get_as<int>(s["n"], "spherical.n");
    if (s.contains("s")) c.spherical.s = get_as<std::vector<double>>(s["s"], "spherical.s");
    if (s.contains("T")) c.spherical.T = parse_radii(s["T"], "spherical.T");
    if (s.contains("r_max")) c.spherical.r_max = get_as<double>(s["r_max"], "spherical.r_max");
    if (s.contains("step")) c.spherical.step = get_as<double>(s["step"], "spherical.step");
  }
  if (j.contains("thresholds")) {
    const json& s = j["thresholds"];
    check_keys(s, "thresholds", {"n"});
    if (s.contains("n")) c.thresholds.n = get_as<std::vector<int>>(s["n"], "thresholds.n");
  }
  if (j.contains("output")) c.output_dir = get_as<std::string>(j["output"], "output");
  if (j.contains("cache")) c.cache_dir = get_as<std::string>(j["cache"], "cache");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, "config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json canonical_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["field"] = c.field.is_rational() ? json("Q") : json{{"d", c.field.d()}};
  j["form"] = to_json(c.gram);
  j["generators"] = json::array();
  for (const auto& g : c.generators) j["generators"].push_back(to_json(g));
  j["levels"] = json::array();
  for (const auto& l : c.levels) j["levels"].push_back({{"prime", l.prime}, {"exponent", l.exponent}});
  j["crt"] = json::array();
  for (const auto& [a, b] : c.crt_pairs) j["crt"].push_back({a, b});
  j["budgets"] = {{"elements", c.element_budget}, {"memory_mb", c.memory_mb}, {"count_nodes", c.count.node_budget}};
  j["spectrum"] = {{"mode", c.spectrum.mode},
                   {"full_limit", c.spectrum.full_limit},
                   {"window", c.spectrum.window},
                   {"max_vertices", c.spectrum.max_vertices},
                   {"cluster_tolerance", c.spectrum.cluster_tolerance},
                   {"seed", c.spectrum.seed}};
  j["count"] = {{"radii", c.count.radii},
                {"margin", c.count.margin},
                {"filters", c.count.filters},
                {"check_inverses", c.count.check_inverses},
                {"min_count", c.count.min_count},
                {"min_points", c.count.min_points}};
  j["spherical"] = {{"n", c.spherical.n},
                    {"s", c.spherical.s},
                    {"T", c.spherical.T},
                    {"r_max", c.spherical.r_max},
                    {"step", c.spherical.step}};
  j["thresholds"] = {{"n", c.thresholds.n}};
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::kIo, "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_json(cfg).dump()); }

QuadraticForm build_form(const RunConfig& cfg) {
  try {
    return QuadraticForm(cfg.field, cfg.gram);
  } catch (const Error& e) {
    fail(ErrorKind::kValidation, std::string("config field 'form': ") + e.what());
  }
}

std::uint64_t effective_element_budget(const RunConfig& cfg, std::size_t dim, int degree, std::size_t generators) {
  // packed entries + hash slots + depth/spinor + edge and inverse-edge ids
  const std::uint64_t per = dim * dim * static_cast<std::uint64_t>(degree) * 2 + 16 + 3 + 8 * generators;
  const std::uint64_t cap = cfg.memory_mb * (std::uint64_t{1} << 20) / per;
  return std::min(cfg.element_budget, cap);
}

std::vector<Finding> validate(const RunConfig& cfg) {
  std::vector<Finding> out;
  const auto error = [&](std::string f, std::string m) {
    out.push_back({Finding::Severity::kError, std::move(f), std::move(m)});
  };
  const auto warn = [&](std::string f, std::string m) {
    out.push_back({Finding::Severity::kWarning, std::move(f), std::move(m)});
  };

  std::optional<QuadraticForm> form;
  try {
    form.emplace(cfg.field, cfg.gram);
  } catch (const Error& e) {
    error("form", e.what());
  }

  const ExactRing ring(cfg.field);
  if (cfg.generators.empty()) error("generators", "no generators given");
  std::vector<bool> good(cfg.generators.size(), false);
  for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
    const std::string f = "generators[" + std::to_string(i) + "]";
    const ExactMatrix& g = cfg.generators[i];
    if (g.size() != cfg.gram.size()) {
      error(f, "size " + std::to_string(g.size()) + " does not match the form");
      continue;
    }
    if (!form) continue;
    if (!is_orthogonal(ring, g, cfg.gram)) {
      error(f, "does not preserve the form");
      continue;
    }
    const RingElement det = determinant(ring, g);
    if (det != ring.one()) {
      error(f, "determinant is " + to_json(det).dump() + ", not 1");
      continue;
    }
    good[i] = true;
  }

  bool all_good = !cfg.generators.empty();
  for (bool b : good) all_good = all_good && b;
  if (all_good) {
    bool commute = true;
    for (std::size_t i = 0; i < cfg.generators.size() && commute; ++i)
      for (std::size_t k = i + 1; k < cfg.generators.size() && commute; ++k)
        commute = multiply(ring, cfg.generators[i], cfg.generators[k]) ==
                  multiply(ring, cfg.generators[k], cfg.generators[i]);
    if (commute) warn("generators", "generators commute: an abelian group cannot be Zariski-dense");
  }

  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    const std::string f = "levels[" + std::to_string(i) + "]";
    const Level& l = cfg.levels[i];
    try {
      const ResidueRing r = make_residue_ring(cfg.field, l.prime, l.exponent);
      const ResidueRing k = r.residue_field();
      if (form && !k.is_unit(determinant(k, form->gram_mod(k))))
        error(f, "the form is degenerate modulo " + std::to_string(l.prime) + " (bad prime)");
    } catch (const Error& e) {
      error(f, e.what());
    }
  }
  for (std::size_t i = 0; i < cfg.crt_pairs.size(); ++i)
    if (cfg.crt_pairs[i].first == cfg.crt_pairs[i].second)
      error("crt[" + std::to_string(i) + "]", "the two primes must differ");

  for (double t : cfg.count.radii)
    if (!(t >= 0)) error("count.radii", "radii must be nonnegative");
  if (!(cfg.count.margin >= 0)) error("count.margin", "margin must be nonnegative");
  for (std::int64_t p : cfg.count.filters) {
    try {
      (void)make_residue_ring(cfg.field, p, 1);
    } catch (const Error& e) {
      error("count.filters", e.what());
    }
  }
  const int sn = cfg.spherical.n;
  if (sn < 1) error("spherical.n", "must be >= 1");
  for (double s : cfg.spherical.s)
    if (!(s > sn / 2.0 && s <= sn)) error("spherical.s", "each s must lie in (n/2, n]");
  for (double t : cfg.spherical.T)
    if (!(t > 0)) error("spherical.T", "radii must be positive");
  if (!(cfg.spherical.step > 0) || !(cfg.spherical.r_max > 0)) error("spherical.step", "step and r_max must be positive");
  for (int n : cfg.thresholds.n)
    if (n < 2) error("thresholds.n", "thresholds need n >= 2");
  return out;
}

bool has_errors(const std::vector<Finding>& findings) {
  for (const auto& f : findings)
    if (f.severity == Finding::Severity::kError) return true;
  return false;
}

json findings_json(const std::vector<Finding>& findings) {
  json a = json::array();
  for (const auto& f : findings)
    a.push_back({{"severity", f.severity == Finding::Severity::kError ? "error" : "warning"},
                 {"field", f.field},
                 {"message", f.message}});
  return a;
}

}  // namespace clab

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "clab/config.hpp"
#include "clab/pipeline.hpp"
#include "clab/presets.hpp"

using nlohmann::json;

namespace {

int print_findings(const std::vector<clab::Finding>& findings) {
  for (const auto& f : findings)
    std::cout << (f.severity == clab::Finding::Severity::kError ? "error" : "warning") << " [" << f.field << "] "
              << f.message << "\n";
  if (findings.empty()) std::cout << "no findings\n";
  return clab::has_errors(findings) ? clab::kExitValidation : clab::kExitOk;
}

json preset_config(const std::string& name) {
  const clab::Preset p = clab::preset_by_name(name);
  json j;
  j["name"] = p.name;
  j["field"] = p.form.field().is_rational() ? json("Q") : json{{"d", p.form.field().d()}};
  j["form"] = clab::to_json(p.form.gram());
  j["generators"] = json::array();
  for (const auto& g : p.generators) j["generators"].push_back(clab::to_json(g));
  j["levels"] = {3, 5, 7};
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Congruence quotients, Cayley spectra, lattice counts and spherical kernels for thin orthogonal groups"};
  app.require_subcommand(1);

  std::string config_path, out_dir, cache_dir;
  unsigned threads = 1;
  bool no_cache = false;
  const auto add_run = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--cache", cache_dir, "cache directory (overrides the config)");
    sub->add_option("--threads", threads, "levels processed concurrently")->check(CLI::Range(1u, 256u));
    sub->add_flag("--no-cache", no_cache, "ignore and do not write the quotient cache");
    return sub;
  };
  add_run("quotient", "enumerate quotients, strong approximation, order scaling");
  add_run("spectrum", "Cayley graphs, spectra, expander series");
  add_run("count", "lattice-point counts and growth exponents");
  add_run("spherical", "spherical-function tables, transforms, kernel checks");
  add_run("thresholds", "exact threshold reports");
  add_run("pipeline", "all stages");

  CLI::App* val = app.add_subcommand("validate", "check a configuration and list findings");
  val->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);

  std::string preset_name;
  CLI::App* dump = app.add_subcommand("preset-dump", "print a configuration for a shipped preset");
  dump->add_option("name", preset_name, "preset name")->required();
  CLI::App* list = app.add_subcommand("presets", "list shipped presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& n : clab::preset_names()) std::cout << n << "  " << clab::preset_by_name(n).description << "\n";
      return clab::kExitOk;
    }
    if (dump->parsed()) {
      std::cout << preset_config(preset_name).dump(2) << "\n";
      return clab::kExitOk;
    }
    const clab::RunConfig cfg = clab::load_config(config_path);
    if (val->parsed()) return print_findings(clab::validate(cfg));

    const std::string sub = app.get_subcommands().front()->get_name();
    clab::RunOptions opts;
    opts.out_dir = out_dir;
    opts.cache_dir = cache_dir;
    opts.threads = threads;
    opts.use_cache = !no_cache;
    const clab::PipelineReport rep = clab::run(sub, cfg, opts);
    for (const auto& f : rep.findings)
      std::cerr << f["severity"].get<std::string>() << " [" << f["field"].get<std::string>() << "] "
                << f["message"].get<std::string>() << "\n";
    for (const auto& s : rep.stages) {
      std::cout << s.name << ": " << s.status << " (" << s.seconds << " s)";
      if (!s.cache_hits.empty()) std::cout << " cache hits: " << s.cache_hits.size();
      if (!s.message.empty()) std::cout << " - " << s.message;
      std::cout << "\n";
    }
    std::cout << "config " << rep.config_hash.substr(0, 16) << " exit " << rep.exit_code << "\n";
    return rep.exit_code;
  } catch (const clab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == clab::ErrorKind::kValidation) return clab::kExitValidation;
    if (e.kind() == clab::ErrorKind::kBudgetExceeded) return clab::kExitBudget;
    return clab::kExitStageFailed;
  }
}

// bsq: config-driven Bohr-Sommerfeld experiment runner.
//
//   bsq run <config>          full pipeline
//   bsq validate <config>     hypothesis checks only
//   bsq invariants <config>   classical side only
//   bsq spectrum <config>     quantum side only
//
// Exit status: 0 ok, 1 stage failure, 2 bad config or usage, 3 hypothesis violated.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bsq/emit.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string format = "both";
  bool quiet = false;
};

int execute(const Args& a, bsq::RunMode mode) {
  bsq::ExperimentConfig cfg;
  try {
    cfg = bsq::load_config(a.config);
    if (a.seed) cfg.mc.seed = *a.seed;
  } catch (const bsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!a.out.empty()) cfg.outputs.directory = a.out;

  bsq::RunOptions ro;
  ro.mode = mode;
  ro.jobs = a.jobs;
  ro.log = a.quiet ? nullptr : &std::cerr;
  bsq::ResultBundle b;
  try {
    b = bsq::run_experiment(cfg, ro);
  } catch (const bsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bsq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  // --out wins over BSQ_OUT_DIR, which wins over the config
  const auto dir = a.out.empty() ? bsq::output_directory(cfg) : std::filesystem::path(a.out);
  const bool js = a.format == "json" || a.format == "both";
  const bool csv = a.format == "csv" || a.format == "both";
  try {
    for (const auto& p : bsq::emit(b, dir, js, csv)) std::cout << p.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return 1;
  }
  if (b.violation) {
    std::cerr << b.violation->hypothesis << " violated (" << b.violation->stage
              << "): " << b.violation->detail << "\n";
    return 3;
  }
  if (b.scaling) {
    if (b.scaling->exact_match) {
      std::cerr << "scaling: exact match\n";
    } else {
      std::cerr << "scaling: exponent " << b.scaling->fitted_exponent << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohr-Sommerfeld lattice vs joint spectrum experiments"};
  app.require_subcommand(1);
  Args a;
  int status = 0;

  auto add = [&](const char* name, const char* help, bsq::RunMode mode) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", a.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--seed", a.seed, "Monte Carlo seed (overrides the config)");
    sub->add_option("--jobs", a.jobs, "worker threads")->check(CLI::Range(1u, 256u));
    sub->add_option("--format", a.format, "json, csv or both")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_flag("-q,--quiet", a.quiet, "no stage log");
    sub->callback([&, mode] { status = execute(a, mode); });
  };
  add("run", "full pipeline", bsq::RunMode::full);
  add("validate", "hypothesis checks only", bsq::RunMode::validate);
  add("invariants", "classical side only", bsq::RunMode::invariants);
  add("spectrum", "quantum side only", bsq::RunMode::spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return status;
}

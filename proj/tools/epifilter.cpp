// Command-line front end: ingest | run | sensitivity | compare-static,
// each driven by a declarative config file.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "epifilter/epifilter.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool strict = false;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  args->out_opt = sub->add_option("--out", args->out_override, "override the output directory");
  args->seed_opt = sub->add_option("--seed", args->seed_override, "override the rng seed");
  sub->add_flag("--strict", args->strict, "treat validation warnings as errors");
}

epifilter::RunConfig resolve(const CommonArgs& args) {
  epifilter::RunConfig cfg = epifilter::load_config(args.config_path);
  if (args.out_opt->count() > 0) cfg.out_dir = args.out_override;
  if (args.seed_opt->count() > 0) cfg.seed = args.seed_override;
  cfg.strict = args.strict;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sliding-window variational data assimilation for compartment epidemic models"};
  app.require_subcommand(1);

  CommonArgs ingest_args, run_args, sens_args, cmp_args;
  CLI::App* ingest = app.add_subcommand("ingest", "normalize raw cumulative tables for one region");
  add_common(ingest, &ingest_args);
  CLI::App* run = app.add_subcommand("run", "filter a series and write the run artifacts");
  add_common(run, &run_args);
  CLI::App* sens = app.add_subcommand("sensitivity", "filter across a grid of scalar q/p weights");
  add_common(sens, &sens_args);
  CLI::App* cmp =
      app.add_subcommand("compare-static", "re-estimating filter vs a fixed-parameter SIR fit");
  add_common(cmp, &cmp_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      epifilter::cmd_ingest(resolve(ingest_args));
    } else if (run->parsed()) {
      epifilter::cmd_run(resolve(run_args));
    } else if (sens->parsed()) {
      epifilter::cmd_sensitivity(resolve(sens_args));
    } else {
      epifilter::cmd_compare_static(resolve(cmp_args));
    }
  } catch (const epifilter::Error& e) {
    std::cerr << "epifilter: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "epifilter: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

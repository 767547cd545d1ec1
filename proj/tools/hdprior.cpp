#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hdprior/cli/commands.hpp"
#include "hdprior/errors.hpp"

int main(int argc, char** argv) {
  namespace cli = hdprior::cli;
  CLI::App app{"Bayesian GLMs with historical data borrowing priors"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out_dir;
  std::string a0;
  bool original_scale = false;
  for (const auto& name : cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--seed", seed, "base random seed");
    sub->add_option("--threads", threads, "maximum worker threads");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--a0", a0, "auto-half-ratio sets a0 from the sample sizes")
        ->check(CLI::IsMember({"auto-half-ratio"}));
    sub->add_flag("--report-original-scale", original_scale,
                  "back-transform coefficients of standardized covariates");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  try {
    cli::RunConfig cfg = cli::load_config(config_path);
    if (sub->count("--seed")) cfg.sampler.seed = seed;
    if (sub->count("--threads")) cfg.sampler.threads = threads;
    if (sub->count("--out")) cfg.out_dir = out_dir;
    if (!a0.empty()) cfg.a0_auto = true;
    if (original_scale) cfg.report_original_scale = true;
    cli::run_command(command, cfg);
  } catch (const std::exception& e) {
    std::cerr << "hdprior " << command << ": " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return 0;
}

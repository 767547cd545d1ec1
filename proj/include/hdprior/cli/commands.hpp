#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "hdprior/cli/config.hpp"
#include "hdprior/cli/dataset_io.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior::cli {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"fit", "lognc", "rmap", "evidence", "bf", "survexpand"};
  return names;
}

/// Runs one subcommand, writing its outputs into cfg.out_dir. Outputs are staged in
/// a sibling directory and moved into place only when the command succeeds.
void run_command(const std::string& command, const RunConfig& cfg);

/// 2 configuration, 3 data, 4 sampler, 5 evidence, 1 anything else.
int exit_code_for(const std::exception& e);

struct LoadedData {
  Formula formula;
  std::vector<Dataset> data;  // current first
  std::vector<ScaleRecord> scales;
};

LoadedData load_run_data(const RunConfig& cfg);

void write_draws_csv(std::ostream& out, const Draws& draws);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Maps draws of coefficients on standardized covariates back to the original
/// covariate scale. Slopes are divided by the covariate sd and each intercept
/// absorbs the centring of its own coefficient group; "sd_" outputs are divided
/// by the sd and "comm_" precisions multiplied by its square. Intercept scales are
/// left unchanged.
Draws to_original_scale(const Draws& draws, const std::vector<ScaleRecord>& scales,
                        const std::vector<std::string>& columns);

}  // namespace hdprior::cli

#pragma once

#include <boost/property_tree/ptree.hpp>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdprior/evidence.hpp"
#include "hdprior/priors.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior::cli {

struct DataConfig {
  std::string current;
  std::vector<std::string> historical;
  std::string formula;
  std::string family = "gaussian";
  std::optional<std::string> link;
  std::optional<std::string> offset;
  std::optional<double> dispersion;  // known dispersion for gaussian, gamma or inverse Gaussian
  bool standardize = false;
};

struct LogncConfig {
  std::vector<double> a0;  // defaults to 21 equally spaced points
  LoessOptions loess;
  std::optional<int> iter_warmup;
  std::optional<int> iter_sampling;
};

struct BfConfig {
  std::vector<std::string> links = {"logit", "probit"};
  std::vector<double> a0;  // defaults to 0, 0.1, ..., 1
};

struct SurvexpandConfig {
  std::string input;
  std::string time = "time";
  std::string event = "event";
  std::vector<std::string> covariates;
  std::vector<double> breaks;  // interior and zero cuts; empty means choose from `intervals`
  int intervals = 0;
  std::string output = "expanded.csv";
};

struct RunConfig {
  DataConfig data;
  std::string prior = "initial";
  boost::property_tree::ptree prior_keys;
  SamplerConfig sampler;
  LogncConfig lognc;
  BfConfig bf;
  SurvexpandConfig survexpand;
  std::string out_dir = "out";
  bool report_original_scale = false;
  bool a0_auto = false;
  std::string base_dir;  // relative paths resolve against the config file's directory
  boost::property_tree::ptree raw;
};

/// INI text with sections [data], [prior], [sampler], [lognc], [bf], [survexpand]
/// and [output]. Unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);

std::string resolve_path(const RunConfig& cfg, const std::string& path);

GlmModel model_from_config(const RunConfig& cfg, const std::string& link_override = "");

/// Prior specification from [prior] for data sets already loaded (data[0] current).
/// NPP grids are read from the files listed under `lognc` when present.
PriorSpec prior_from_config(const RunConfig& cfg, std::span<const Dataset> data);

/// mu0, sigma0, alpha0 and gamma0 from [prior].
InitialPriorHyper initial_hyper_from_config(const RunConfig& cfg, Eigen::Index p);

/// The resolved configuration, every default filled in, for reporting.
boost::property_tree::ptree resolved_config(const RunConfig& cfg);

std::vector<double> parse_list(const std::string& text, const std::string& key);

}  // namespace hdprior::cli

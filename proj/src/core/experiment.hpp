#pragma once

#include "core/data_gen.hpp"
#include "core/fem.hpp"
#include "core/posterior.hpp"
#include "core/trainer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mopinn {

struct ExperimentConfig {
  std::string experiment;  // linear1d_forward, nonlinear1d_forward,
                           // allen_cahn_2d, inverse1d, inverse2d,
                           // fem_compare, prior_augmented
  int noise_case = 1;      // 1: sigma 0.01, 2: sigma 0.1
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;  // 0 -> same as seed
  int outputs = -1;             // M override
  int epochs = -1;
  bool paper_scale = false;
  bool deterministic = false;
  int ensemble_size = 500;  // FEM Monte Carlo members
  std::string out_dir = ".";
  std::string prior_file;

  void validate() const;
};

// Fully resolved problem + training setup for one experiment.
struct ExperimentSetup {
  TrainConfig tcfg;
  std::vector<Measurement> measurements;
  NoiseSpec noise;
  std::vector<Point> grid;
};

ExperimentSetup make_experiment_setup(const ExperimentConfig& cfg);

// Runs the experiment, writes all artifact files into cfg.out_dir, and
// returns the manifest (also written as manifest.json).
nlohmann::json run_experiment(const ExperimentConfig& cfg);

// Locations used for the FEM comparison quantiles and the prior-statistics
// file: 9 equally spaced interior points x = -0.56 + 0.14 i.
std::vector<double> fem_compare_locations();

PriorStatsConstraint read_prior_stats(const std::string& path);
void write_prior_stats(const PriorStatsConstraint& prior,
                       const std::string& path);

}  // namespace mopinn

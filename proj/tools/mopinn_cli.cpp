// Experiment front end. Talks to the core exclusively through the C API.

#include "mopinn/mopinn.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

// One "key = value" pair per line; '#' starts a comment. Flags given on the
// command line win over file values.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("--config", "cannot read " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError(
          "--config", "line " + std::to_string(lineno) + ": expected key = value");
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

int fail(int code) {
  std::cerr << "error: " << mopinn_last_error() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MO-PINN experiments: forward/inverse PDE training with "
               "posterior statistics and an FEM Monte Carlo baseline"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run one experiment");
  std::string experiment, noise = "case1", out_dir = ".", prior_file,
              config_file;
  long long seed = 0, init_seed = -1;
  int outputs = -1, epochs = -1, ensemble = -1;
  bool deterministic = false, paper_scale = false;
  run->add_option("experiment", experiment,
                  "linear1d_forward | nonlinear1d_forward | allen_cahn_2d | "
                  "inverse1d | inverse2d | fem_compare | prior_augmented")
      ->required();
  run->add_option("--noise", noise, "case1 (sigma 0.01) or case2 (sigma 0.1)");
  run->add_option("--seed", seed, "base seed for data and initialization");
  run->add_option("--init-seed", init_seed,
                  "network init seed (default: same as --seed)");
  run->add_option("--outputs", outputs, "number of replica outputs M");
  run->add_option("--epochs", epochs, "training epochs");
  run->add_option("--ensemble", ensemble, "FEM Monte Carlo ensemble size");
  run->add_flag("--deterministic", deterministic,
                "fixed-order reductions; identical config reproduces outputs");
  run->add_flag("--paper-scale", paper_scale,
                "full-size 2D configuration (3x200 hidden, 2000 outputs)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--prior", prior_file,
                  "prior statistics CSV (prior_augmented)");
  run->add_option("--config", config_file, "key = value config file");

  // qq
  auto* qq = app.add_subcommand("qq", "quantile-quantile pairs of two "
                                      "ensemble CSV files");
  std::string field_a, field_b, qq_out = "qq.csv";
  qq->add_option("field_a", field_a, "first ensemble CSV")->required();
  qq->add_option("field_b", field_b, "second ensemble CSV")->required();
  qq->add_option("--out", qq_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (qq->parsed()) {
    const int rc = mopinn_qq_files(field_a.c_str(), field_b.c_str(),
                                   qq_out.c_str());
    if (rc != MOPINN_OK) return fail(rc);
    std::cout << "wrote " << qq_out << '\n';
    return 0;
  }

  std::map<std::string, std::string> settings;
  if (!config_file.empty()) {
    try {
      settings = parse_config_file(config_file);
    } catch (const CLI::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return MOPINN_ERR_CONFIG;
    }
    const auto it = settings.find("experiment");
    if (it != settings.end()) {
      settings.erase(it);  // positional argument wins
    }
  }
  // flags override file values
  if (run->count("--noise") || !settings.count("noise")) settings["noise"] = noise;
  if (run->count("--seed") || !settings.count("seed"))
    settings["seed"] = std::to_string(seed);
  if (init_seed >= 0) settings["init_seed"] = std::to_string(init_seed);
  if (outputs > 0 || run->count("--outputs"))
    settings["outputs"] = std::to_string(outputs);
  if (epochs > 0 || run->count("--epochs"))
    settings["epochs"] = std::to_string(epochs);
  if (ensemble > 0 || run->count("--ensemble"))
    settings["ensemble"] = std::to_string(ensemble);
  if (deterministic) settings["deterministic"] = "1";
  if (paper_scale) settings["paper_scale"] = "1";
  if (run->count("--out") || !settings.count("out")) settings["out"] = out_dir;
  if (!prior_file.empty()) settings["prior"] = prior_file;

  mopinn_experiment* exp = mopinn_experiment_create(experiment.c_str());
  if (exp == nullptr) return fail(MOPINN_ERR_CONFIG);
  for (const auto& [key, value] : settings) {
    const int rc = mopinn_experiment_set(exp, key.c_str(), value.c_str());
    if (rc != MOPINN_OK) {
      mopinn_experiment_destroy(exp);
      return fail(rc);
    }
  }

  char* manifest = nullptr;
  const int rc = mopinn_experiment_run(exp, &manifest);
  mopinn_experiment_destroy(exp);
  if (rc != MOPINN_OK) return fail(rc);
  std::cout << manifest << '\n';
  mopinn_free(manifest);
  return 0;
}

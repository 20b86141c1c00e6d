#include "core/experiment.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mopinn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kVersion = "0.1.0";

bool is_training_experiment(const std::string& id) {
  return id == "linear1d_forward" || id == "nonlinear1d_forward" ||
         id == "allen_cahn_2d" || id == "inverse1d" || id == "inverse2d";
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::vector<double> exact_on_grid(const PdeKind& pde, const Domain& domain,
                                  const std::vector<Point>& grid, Quantity q) {
  std::vector<double> vals;
  vals.reserve(grid.size());
  for (const auto& p : grid) {
    const auto mv = manufactured_solution(pde, domain, p);
    vals.push_back(q == Quantity::U ? mv.u : mv.f);
  }
  return vals;
}

json config_json(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  json j;
  j["experiment"] = cfg.experiment;
  j["noise_case"] = cfg.noise_case;
  j["sigma_u"] = setup.noise.sigma_u;
  j["sigma_f"] = setup.noise.sigma_f;
  j["seed"] = cfg.seed;
  j["init_seed"] = setup.tcfg.effective_init_seed();
  j["outputs"] = setup.tcfg.replica_count;
  j["epochs"] = setup.tcfg.epochs;
  j["learning_rate"] = setup.tcfg.learning_rate;
  j["u_shape"] = setup.tcfg.u_shape;
  j["f_shape"] = setup.tcfg.f_shape;
  j["stencil_h"] = setup.tcfg.stencil.h;
  j["collocation_points"] = setup.tcfg.collocation.interior.size();
  j["paper_scale"] = cfg.paper_scale;
  j["deterministic"] = cfg.deterministic;
  j["out_dir"] = cfg.out_dir;
  return j;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  const fs::path tmp = dir / "manifest.json.tmp";
  {
    auto os = open_out(tmp);
    os << manifest.dump(2) << '\n';
  }
  fs::rename(tmp, dir / "manifest.json");
}

double rmse(const Eigen::VectorXd& mean, const std::vector<double>& exact) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double d = mean[i] - exact[i];
    acc += d * d;
  }
  return std::sqrt(acc / mean.size());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!is_training_experiment(experiment) && experiment != "fem_compare" &&
      experiment != "prior_augmented")
    throw ConfigError("unknown experiment id: " + experiment);
  if (noise_case != 1 && noise_case != 2)
    throw ConfigError("noise case must be 1 or 2");
  if (outputs == 0 || (outputs < 0 && outputs != -1))
    throw ConfigError("outputs must be >= 1");
  if (epochs == 0 || (epochs < 0 && epochs != -1))
    throw ConfigError("epochs must be >= 1");
  if (ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
}

std::vector<double> fem_compare_locations() {
  std::vector<double> xs;
  for (int i = 0; i < 9; ++i) xs.push_back(-0.56 + 0.14 * i);
  return xs;
}

ExperimentSetup make_experiment_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentSetup s;
  s.noise.sigma_u = cfg.noise_case == 1 ? 0.01 : 0.1;
  s.noise.sigma_f = s.noise.sigma_u;

  TrainConfig& t = s.tcfg;
  t.seed = cfg.seed;
  t.init_seed = cfg.init_seed;
  t.learning_rate = 1e-3;

  const std::string& id = cfg.experiment;
  const bool one_d = id != "allen_cahn_2d" && id != "inverse2d";
  if (one_d) {
    if (id == "nonlinear1d_forward" || id == "inverse1d") {
      t.pde.family = PdeFamily::NonlinearTanh1D;
      t.pde.k_fixed = 0.7;
      t.pde.k_trainable = (id == "inverse1d");
    } else {
      t.pde.family = PdeFamily::Linear1D;
    }
    t.pde.lambda = 0.01;
    t.domain = domain_of(t.pde.family);
    t.stencil = {1e-3, 1};
    t.collocation = uniform_collocation(t.domain, t.stencil, 201);
    t.replica_count = cfg.outputs > 0 ? cfg.outputs : 500;
    t.epochs = cfg.epochs > 0 ? cfg.epochs : 10000;
    t.u_shape = {1, 20, 40, t.replica_count};
    t.f_shape = {1, 20, 40, t.replica_count};
    s.grid = eval_grid_1d(t.domain, 201);

    int n_f = 16, n_u = 2;
    if (id == "nonlinear1d_forward") n_f = 32;
    if (id == "inverse1d") {
      n_f = 32;
      n_u = 8;
    }
    if (id == "prior_augmented") n_f = 5;
    auto f_meas = sample_measurements(
        t.pde, t.domain, Quantity::F,
        EquallySpaced{n_f, t.domain.xmin, t.domain.xmax}, s.noise,
        derive_seed(cfg.seed, 0xf00));
    auto u_meas = sample_measurements(
        t.pde, t.domain, Quantity::U,
        EquallySpaced{n_u, t.domain.xmin, t.domain.xmax}, s.noise,
        derive_seed(cfg.seed, 0x500));
    s.measurements = std::move(u_meas);
    s.measurements.insert(s.measurements.end(), f_meas.begin(), f_meas.end());
  } else {
    t.pde.family = id == "allen_cahn_2d" ? PdeFamily::AllenCahn2D
                                         : PdeFamily::QuadraticReaction2D;
    t.pde.lambda = 0.01;
    if (id == "inverse2d") {
      t.pde.k_fixed = 1.0;
      t.pde.k_trainable = true;
    }
    t.domain = domain_of(t.pde.family);
    t.stencil = {1e-2, 2};
    if (cfg.paper_scale) {
      t.collocation = uniform_collocation(t.domain, t.stencil, 41);
      t.replica_count = cfg.outputs > 0 ? cfg.outputs : 2000;
      t.epochs = cfg.epochs > 0 ? cfg.epochs : 50000;
      t.u_shape = {2, 200, 200, 200, t.replica_count};
    } else {
      t.collocation = uniform_collocation(t.domain, t.stencil, 21);
      t.replica_count = cfg.outputs > 0 ? cfg.outputs : 200;
      t.epochs = cfg.epochs > 0 ? cfg.epochs : 5000;
      t.u_shape = {2, 50, 50, t.replica_count};
    }
    t.f_shape = t.u_shape;
    s.grid = eval_grid_2d(t.domain, 101);

    std::vector<Measurement> meas = sample_measurements(
        t.pde, t.domain, Quantity::U, BoundaryEqual{25}, s.noise,
        derive_seed(cfg.seed, 0x501));
    if (id == "inverse2d") {
      auto u_int = sample_measurements(t.pde, t.domain, Quantity::U,
                                       UniformRandom{100, t.domain}, s.noise,
                                       derive_seed(cfg.seed, 0x500));
      meas.insert(meas.end(), u_int.begin(), u_int.end());
    }
    const int n_f = id == "allen_cahn_2d" ? 500 : 100;
    auto f_meas = sample_measurements(t.pde, t.domain, Quantity::F,
                                      UniformRandom{n_f, t.domain}, s.noise,
                                      derive_seed(cfg.seed, 0xf00));
    meas.insert(meas.end(), f_meas.begin(), f_meas.end());
    s.measurements = std::move(meas);
  }
  return s;
}

namespace {

struct TrainedRun {
  TrainState state;
  ReplicaDataset data;
  PosteriorField u_field;
  PosteriorField f_field;
  CoverageMap u_cov;
  CoverageMap f_cov;
  std::vector<double> u_exact;
  std::vector<double> f_exact;
};

TrainedRun run_training(const ExperimentSetup& setup, std::uint64_t seed) {
  TrainedRun run;
  run.data = expand_to_replicas(setup.measurements, setup.noise,
                                setup.tcfg.replica_count,
                                derive_seed(seed, 0x2e9));
  run.state = train(setup.tcfg, run.data);
  run.u_field = summarize(run.state.u_net, setup.grid);
  run.f_field = summarize(run.state.f_net, setup.grid);
  run.u_exact = exact_on_grid(setup.tcfg.pde, setup.tcfg.domain, setup.grid,
                              Quantity::U);
  run.f_exact = exact_on_grid(setup.tcfg.pde, setup.tcfg.domain, setup.grid,
                              Quantity::F);
  run.u_cov = coverage(run.u_field, run.u_exact);
  run.f_cov = coverage(run.f_field, run.f_exact);
  return run;
}

void write_run_artifacts(const TrainedRun& run, const ExperimentSetup& setup,
                         const fs::path& dir, const std::string& suffix,
                         std::vector<std::string>& outputs) {
  const int dim = setup.tcfg.domain.dim;
  const auto name = [&suffix](const std::string& base, const std::string& ext) {
    return suffix.empty() ? base + ext : base + "_" + suffix + ext;
  };
  {
    auto os = open_out(dir / name("u_posterior", ".csv"));
    write_posterior_csv(run.u_field, run.u_exact, run.u_cov, dim, os);
    outputs.push_back(name("u_posterior", ".csv"));
  }
  {
    auto os = open_out(dir / name("f_posterior", ".csv"));
    write_posterior_csv(run.f_field, run.f_exact, run.f_cov, dim, os);
    outputs.push_back(name("f_posterior", ".csv"));
  }
  if (dim == 1) {
    auto os = open_out(dir / name("u_ensemble", ".csv"));
    write_ensemble_csv(run.u_field, dim, os);
    outputs.push_back(name("u_ensemble", ".csv"));
    auto os2 = open_out(dir / name("f_ensemble", ".csv"));
    write_ensemble_csv(run.f_field, dim, os2);
    outputs.push_back(name("f_ensemble", ".csv"));
  }
  {
    auto os = open_out(dir / name("loss_trace", ".csv"));
    write_loss_trace(run.state.history, os);
    outputs.push_back(name("loss_trace", ".csv"));
  }
  {
    auto os = open_out(dir / name("checkpoint", ".bin"), true);
    save_checkpoint(run.state, os);
    outputs.push_back(name("checkpoint", ".bin"));
  }
  if (run.state.k.size() > 0) {
    auto os = open_out(dir / name("k_histogram", ".csv"));
    write_histogram_csv(k_histogram(run.state.k, 20), os);
    outputs.push_back(name("k_histogram", ".csv"));
  }
}

}  // namespace

PriorStatsConstraint read_prior_stats(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read prior stats file: " + path);
  PriorStatsConstraint prior;
  std::vector<double> means, stds;
  std::string line;
  bool any_std = false, all_std = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string cell;
    Point p;
    if (!std::getline(ls, cell, ',')) continue;
    p.x = std::stod(cell);
    if (!std::getline(ls, cell, ','))
      throw ConfigError("prior stats row needs at least x,mean");
    means.push_back(std::stod(cell));
    prior.locations.push_back(p);
    if (std::getline(ls, cell, ',') && !cell.empty()) {
      stds.push_back(std::stod(cell));
      any_std = true;
    } else {
      all_std = false;
    }
  }
  if (prior.locations.empty()) throw ConfigError("prior stats file is empty");
  if (any_std && !all_std)
    throw ConfigError("prior stats stds must be given for all rows or none");
  prior.target_means =
      Eigen::Map<Eigen::VectorXd>(means.data(), means.size());
  if (any_std)
    prior.target_stds = Eigen::Map<Eigen::VectorXd>(stds.data(), stds.size());
  return prior;
}

void write_prior_stats(const PriorStatsConstraint& prior,
                       const std::string& path) {
  auto os = open_out(path);
  os << "x,mean,std\n";
  for (std::size_t i = 0; i < prior.locations.size(); ++i) {
    os << fmt_g17(prior.locations[i].x) << ','
       << fmt_g17(prior.target_means[i]);
    if (prior.target_stds) os << ',' << fmt_g17((*prior.target_stds)[i]);
    os << '\n';
  }
}

json run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  ExperimentSetup setup = make_experiment_setup(cfg);
  json manifest;
  manifest["config"] = config_json(cfg, setup);
  manifest["versions"] = {{"mopinn", kVersion}};
  std::vector<std::string> outputs;
  json metrics;

  if (is_training_experiment(cfg.experiment)) {
    TrainedRun run = run_training(setup, cfg.seed);
    {
      auto os = open_out(dir / "dataset.txt");
      write_dataset(run.data, setup.tcfg.domain.dim, os);
      outputs.push_back("dataset.txt");
    }
    write_run_artifacts(run, setup, dir, "", outputs);
    metrics["coverage_u"] = run.u_cov.fraction;
    metrics["coverage_f"] = run.f_cov.fraction;
    metrics["mean_std_u"] = run.u_field.stddev.mean();
    metrics["final_loss"] = run.state.history.back().total;
    if (run.state.k.size() > 0) {
      const auto hist = k_histogram(run.state.k, 20);
      metrics["k_mean"] = hist.mean;
      metrics["k_std"] = hist.stddev;
    }
  } else if (cfg.experiment == "fem_compare") {
    ExperimentConfig base = cfg;
    base.experiment = "linear1d_forward";
    setup = make_experiment_setup(base);
    manifest["config"] = config_json(cfg, setup);
    manifest["config"]["experiment"] = "fem_compare";
    manifest["config"]["ensemble_size"] = cfg.ensemble_size;

    TrainedRun run = run_training(setup, cfg.seed);
    {
      auto os = open_out(dir / "dataset.txt");
      write_dataset(run.data, 1, os);
      outputs.push_back("dataset.txt");
    }
    write_run_artifacts(run, setup, dir, "", outputs);

    const Mesh1D mesh =
        Mesh1D::uniform(setup.tcfg.domain.xmin, setup.tcfg.domain.xmax, 141);
    const PosteriorField fem_field =
        fem_mc_ensemble(setup.measurements, setup.noise, cfg.ensemble_size,
                        mesh, setup.tcfg.pde.lambda, derive_seed(cfg.seed, 0xabc));
    std::vector<Point> node_points(fem_field.eval_points);
    const auto fem_exact =
        exact_on_grid(setup.tcfg.pde, setup.tcfg.domain, node_points, Quantity::U);
    const auto fem_cov = coverage(fem_field, fem_exact);
    {
      auto os = open_out(dir / "fem_posterior.csv");
      write_posterior_csv(fem_field, fem_exact, fem_cov, 1, os);
      outputs.push_back("fem_posterior.csv");
    }
    {
      auto os = open_out(dir / "fem_ensemble.csv");
      write_ensemble_csv(fem_field, 1, os);
      outputs.push_back("fem_ensemble.csv");
    }

    // MO-PINN posterior on the FEM nodes for the pointwise comparison
    const PosteriorField pinn_nodes = summarize(run.state.u_net, node_points);
    double max_mean_diff = 0.0, max_std = 0.0;
    for (Eigen::Index i = 0; i < pinn_nodes.mean.size(); ++i) {
      max_mean_diff = std::max(max_mean_diff,
                               std::abs(pinn_nodes.mean[i] - fem_field.mean[i]));
      max_std = std::max({max_std, pinn_nodes.stddev[i], fem_field.stddev[i]});
    }
    metrics["max_mean_diff"] = max_mean_diff;
    metrics["max_std"] = max_std;

    // quantile pairs at the 9 comparison locations
    const auto xs = fem_compare_locations();
    std::vector<Point> loc_points;
    for (double x : xs) loc_points.push_back({x, 0.0});
    const PosteriorField pinn_locs = summarize(run.state.u_net, loc_points);
    const auto fractions = default_qq_fractions();
    double qq_max_gap = 0.0;
    {
      auto os = open_out(dir / "qq.csv");
      os << "x,fraction,q_mopinn,q_fem\n";
      for (std::size_t li = 0; li < xs.size(); ++li) {
        // nearest FEM node (the locations sit on nodes for the default mesh)
        Eigen::Index node = 0;
        (mesh.nodes.array() - xs[li]).abs().minCoeff(&node);
        const auto pairs =
            qq_points(pinn_locs.ensemble.row(li).transpose(),
                      fem_field.ensemble.row(node).transpose(), fractions);
        const double loc_std = std::max(pinn_locs.stddev[li],
                                        fem_field.stddev[node]);
        for (std::size_t qi = 0; qi < pairs.size(); ++qi) {
          os << fmt_g17(xs[li]) << ',' << fmt_g17(fractions[qi]) << ','
             << fmt_g17(pairs[qi].first) << ',' << fmt_g17(pairs[qi].second)
             << '\n';
          if (qi + 1 < pairs.size())  // interior fractions
            qq_max_gap = std::max(
                qq_max_gap,
                std::abs(pairs[qi].first - pairs[qi].second) / loc_std);
        }
      }
      outputs.push_back("qq.csv");
    }
    metrics["qq_max_gap_in_stds"] = qq_max_gap;

    // prior statistics for later reuse by prior_augmented
    PriorStatsConstraint prior;
    prior.target_means.resize(xs.size());
    Eigen::VectorXd prior_stds(xs.size());
    for (std::size_t li = 0; li < xs.size(); ++li) {
      Eigen::Index node = 0;
      (mesh.nodes.array() - xs[li]).abs().minCoeff(&node);
      prior.locations.push_back({xs[li], 0.0});
      prior.target_means[li] = fem_field.mean[node];
      prior_stds[li] = fem_field.stddev[node];
    }
    prior.target_stds = prior_stds;
    write_prior_stats(prior, (dir / "prior_stats.csv").string());
    outputs.push_back("prior_stats.csv");
    metrics["coverage_u"] = run.u_cov.fraction;
  } else {  // prior_augmented
    if (cfg.prior_file.empty())
      throw ConfigError("prior_augmented needs a prior stats file (--prior)");
    const PriorStatsConstraint prior = read_prior_stats(cfg.prior_file);
    if (!prior.target_stds)
      throw ConfigError("prior stats file must carry stds for the full variant");

    const ReplicaDataset data = expand_to_replicas(
        setup.measurements, setup.noise, setup.tcfg.replica_count,
        derive_seed(cfg.seed, 0x2e9));
    {
      auto os = open_out(dir / "dataset.txt");
      write_dataset(data, 1, os);
      outputs.push_back("dataset.txt");
    }

    const auto u_exact = exact_on_grid(setup.tcfg.pde, setup.tcfg.domain,
                                       setup.grid, Quantity::U);
    const auto f_exact = exact_on_grid(setup.tcfg.pde, setup.tcfg.domain,
                                       setup.grid, Quantity::F);
    struct Variant {
      const char* name;
      bool use_mean;
      bool use_std;
    };
    for (const Variant v : {Variant{"meas_only", false, false},
                            Variant{"mean_only", true, false},
                            Variant{"mean_std", true, true}}) {
      TrainConfig tcfg = setup.tcfg;
      if (v.use_mean) {
        PriorStatsConstraint pc = prior;
        if (!v.use_std) pc.target_stds.reset();
        tcfg.prior = pc;
      }
      const TrainState state = train(tcfg, data);
      TrainedRun run;
      run.state = state;
      run.u_field = summarize(state.u_net, setup.grid);
      run.f_field = summarize(state.f_net, setup.grid);
      run.u_exact = u_exact;
      run.f_exact = f_exact;
      run.u_cov = coverage(run.u_field, u_exact);
      run.f_cov = coverage(run.f_field, f_exact);
      write_run_artifacts(run, setup, dir, v.name, outputs);
      metrics[std::string("rmse_u_") + v.name] = rmse(run.u_field.mean, u_exact);
      metrics[std::string("coverage_u_") + v.name] = run.u_cov.fraction;
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  manifest["metrics"] = metrics;
  manifest["outputs"] = outputs;
  write_manifest(dir, manifest);
  return manifest;
}

}  // namespace mopinn

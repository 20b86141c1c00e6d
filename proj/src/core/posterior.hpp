#pragma once

#include "core/data_gen.hpp"
#include "core/nn.hpp"
#include "core/pde.hpp"
#include "core/trainer.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <utility>
#include <vector>

namespace mopinn {

// Per-point ensemble of the M replica predictions with derived statistics.
// std is the population (divide-by-M) form.
struct PosteriorField {
  std::vector<Point> eval_points;
  Eigen::MatrixXd ensemble;  // n_points x M
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static PosteriorField from_ensemble(std::vector<Point> points,
                                      Eigen::MatrixXd ensemble);
};

struct CoverageMap {
  std::vector<bool> covered;  // |exact - mean| <= 2 * std
  double fraction = 0.0;
};

PosteriorField summarize(const MlpNetwork& net, const std::vector<Point>& grid);

CoverageMap coverage(const PosteriorField& field,
                     const std::vector<double>& exact);

struct Histogram {
  std::vector<double> bin_edges;  // bin_count + 1 edges spanning [min, max]
  std::vector<int> counts;
  double mean = 0.0;
  double stddev = 0.0;
};

Histogram k_histogram(const Eigen::VectorXd& k_values, int bin_count);

// Nearest-rank empirical quantile of an unsorted sample, fraction in (0, 1].
double empirical_quantile(Eigen::VectorXd sample, double fraction);

std::vector<double> default_qq_fractions();  // 10%, 20%, ..., 100%

// Paired empirical quantiles of two ensembles at the given fractions.
std::vector<std::pair<double, double>> qq_points(
    const Eigen::VectorXd& ensemble_a, const Eigen::VectorXd& ensemble_b,
    const std::vector<double>& fractions);

struct MConvergenceRow {
  int replica_count = 0;
  PosteriorField u_field;
  double delta_mean = 0.0;  // max pointwise change vs previous M
  double delta_std = 0.0;
};

// Trains once per M (shared measurements, fresh replica noise per M) and
// reports the change of the u mean/std fields between consecutive entries.
std::vector<MConvergenceRow> convergence_in_m(
    const TrainConfig& base, const std::vector<Measurement>& measurements,
    const NoiseSpec& noise, const std::vector<Point>& grid,
    const std::vector<int>& m_list);

// Evaluation grids used for reporting.
std::vector<Point> eval_grid_1d(const Domain& domain, int count);
std::vector<Point> eval_grid_2d(const Domain& domain, int per_axis);

// CSV plotting contract.
void write_posterior_csv(const PosteriorField& field,
                         const std::vector<double>& exact,
                         const CoverageMap& cov, int dim, std::ostream& os);
void write_ensemble_csv(const PosteriorField& field, int dim, std::ostream& os);
PosteriorField read_ensemble_csv(std::istream& is);
void write_histogram_csv(const Histogram& hist, std::ostream& os);

}  // namespace mopinn

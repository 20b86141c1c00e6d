#include "core/posterior.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace mopinn {

PosteriorField PosteriorField::from_ensemble(std::vector<Point> points,
                                             Eigen::MatrixXd ensemble) {
  if (points.empty()) throw ConfigError("empty evaluation grid");
  if (ensemble.rows() != static_cast<Eigen::Index>(points.size()))
    throw ConfigError("ensemble rows do not match grid");
  PosteriorField field;
  field.eval_points = std::move(points);
  field.ensemble = std::move(ensemble);
  const int n = static_cast<int>(field.ensemble.rows());
  const int m = static_cast<int>(field.ensemble.cols());
  field.mean.resize(n);
  field.stddev.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::ArrayXd row = field.ensemble.row(i).transpose().array();
    const double mu = row.mean();
    field.mean[i] = mu;
    field.stddev[i] = std::sqrt((row - mu).square().sum() / m);
  }
  return field;
}

PosteriorField summarize(const MlpNetwork& net,
                         const std::vector<Point>& grid) {
  if (grid.empty()) throw ConfigError("empty evaluation grid");
  Eigen::MatrixXd x(grid.size(), net.input_dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    x(i, 0) = grid[i].x;
    if (net.input_dim() == 2) x(i, 1) = grid[i].y;
  }
  return PosteriorField::from_ensemble(grid, net.forward_batch(x));
}

CoverageMap coverage(const PosteriorField& field,
                     const std::vector<double>& exact) {
  if (exact.size() != field.eval_points.size())
    throw ConfigError("exact values do not match grid");
  CoverageMap map;
  map.covered.resize(exact.size());
  int hits = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const bool in =
        std::abs(exact[i] - field.mean[i]) <= 2.0 * field.stddev[i];
    map.covered[i] = in;
    hits += in ? 1 : 0;
  }
  map.fraction = static_cast<double>(hits) / exact.size();
  return map;
}

Histogram k_histogram(const Eigen::VectorXd& k_values, int bin_count) {
  if (k_values.size() == 0) throw ConfigError("empty k array");
  if (bin_count < 1) throw ConfigError("bin count must be >= 1");
  Histogram h;
  const double lo = k_values.minCoeff();
  const double hi = k_values.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bin_count : 1.0;
  h.bin_edges.resize(bin_count + 1);
  for (int b = 0; b <= bin_count; ++b) h.bin_edges[b] = lo + b * width;
  h.counts.assign(bin_count, 0);
  for (int i = 0; i < k_values.size(); ++i) {
    int b = static_cast<int>((k_values[i] - lo) / width);
    b = std::clamp(b, 0, bin_count - 1);
    h.counts[b] += 1;
  }
  const Eigen::ArrayXd arr = k_values.array();
  h.mean = arr.mean();
  h.stddev = std::sqrt((arr - h.mean).square().sum() / k_values.size());
  return h;
}

double empirical_quantile(Eigen::VectorXd sample, double fraction) {
  if (sample.size() == 0) throw ConfigError("empty ensemble");
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("quantile fraction must be in (0, 1]");
  std::sort(sample.data(), sample.data() + sample.size());
  const auto n = sample.size();
  auto rank = static_cast<Eigen::Index>(std::ceil(fraction * n));
  rank = std::clamp<Eigen::Index>(rank, 1, n);
  return sample[rank - 1];
}

std::vector<double> default_qq_fractions() {
  std::vector<double> f;
  for (int i = 1; i <= 10; ++i) f.push_back(0.1 * i);
  return f;
}

std::vector<std::pair<double, double>> qq_points(
    const Eigen::VectorXd& ensemble_a, const Eigen::VectorXd& ensemble_b,
    const std::vector<double>& fractions) {
  if (ensemble_a.size() == 0 || ensemble_b.size() == 0)
    throw ConfigError("empty ensemble");
  std::vector<std::pair<double, double>> out;
  out.reserve(fractions.size());
  for (double f : fractions)
    out.emplace_back(empirical_quantile(ensemble_a, f),
                     empirical_quantile(ensemble_b, f));
  return out;
}

std::vector<MConvergenceRow> convergence_in_m(
    const TrainConfig& base, const std::vector<Measurement>& measurements,
    const NoiseSpec& noise, const std::vector<Point>& grid,
    const std::vector<int>& m_list) {
  for (std::size_t i = 1; i < m_list.size(); ++i)
    if (m_list[i] <= m_list[i - 1])
      throw ConfigError("M list must be strictly increasing");

  std::vector<MConvergenceRow> rows;
  for (int m : m_list) {
    TrainConfig cfg = base;
    cfg.replica_count = m;
    cfg.u_shape.back() = m;
    cfg.f_shape.back() = m;
    const ReplicaDataset data = expand_to_replicas(
        measurements, noise, m, derive_seed(base.seed, 0xc0 + m));
    const TrainState state = train(cfg, data);
    MConvergenceRow row;
    row.replica_count = m;
    row.u_field = summarize(state.u_net, grid);
    if (!rows.empty()) {
      const auto& prev = rows.back().u_field;
      row.delta_mean = (row.u_field.mean - prev.mean).cwiseAbs().maxCoeff();
      row.delta_std = (row.u_field.stddev - prev.stddev).cwiseAbs().maxCoeff();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Point> eval_grid_1d(const Domain& domain, int count) {
  std::vector<Point> grid;
  for (int i = 0; i < count; ++i)
    grid.push_back({domain.xmin + (domain.xmax - domain.xmin) *
                                      static_cast<double>(i) / (count - 1),
                    0.0});
  return grid;
}

std::vector<Point> eval_grid_2d(const Domain& domain, int per_axis) {
  std::vector<Point> grid;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      grid.push_back({domain.xmin + (domain.xmax - domain.xmin) *
                                        static_cast<double>(i) / (per_axis - 1),
                      domain.ymin + (domain.ymax - domain.ymin) *
                                        static_cast<double>(j) / (per_axis - 1)});
  return grid;
}

void write_posterior_csv(const PosteriorField& field,
                         const std::vector<double>& exact,
                         const CoverageMap& cov, int dim, std::ostream& os) {
  os << (dim == 2 ? "x,y,exact,mean,std,covered\n"
                  : "x,exact,mean,std,covered\n");
  for (std::size_t i = 0; i < field.eval_points.size(); ++i) {
    os << fmt_g17(field.eval_points[i].x) << ',';
    if (dim == 2) os << fmt_g17(field.eval_points[i].y) << ',';
    os << fmt_g17(exact[i]) << ',' << fmt_g17(field.mean[i]) << ','
       << fmt_g17(field.stddev[i]) << ',' << (cov.covered[i] ? 1 : 0) << '\n';
  }
}

void write_ensemble_csv(const PosteriorField& field, int dim,
                        std::ostream& os) {
  const int m = static_cast<int>(field.ensemble.cols());
  os << "x";
  if (dim == 2) os << ",y";
  for (int j = 0; j < m; ++j) os << ",v" << j;
  os << '\n';
  for (std::size_t i = 0; i < field.eval_points.size(); ++i) {
    os << fmt_g17(field.eval_points[i].x);
    if (dim == 2) os << ',' << fmt_g17(field.eval_points[i].y);
    for (int j = 0; j < m; ++j) os << ',' << fmt_g17(field.ensemble(i, j));
    os << '\n';
  }
}

PosteriorField read_ensemble_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ConfigError("empty ensemble csv");
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "x") throw ConfigError("bad ensemble header");
  const int dim = (cols.size() > 1 && cols[1] == "y") ? 2 : 1;
  const int m = static_cast<int>(cols.size()) - dim;
  if (m < 1) throw ConfigError("ensemble csv has no value columns");

  std::vector<Point> points;
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Point p;
    std::getline(ls, cell, ',');
    p.x = std::stod(cell);
    if (dim == 2) {
      std::getline(ls, cell, ',');
      p.y = std::stod(cell);
    }
    Eigen::VectorXd vals(m);
    for (int j = 0; j < m; ++j) {
      if (!std::getline(ls, cell, ',')) throw ConfigError("short ensemble row");
      vals[j] = std::stod(cell);
    }
    points.push_back(p);
    rows.push_back(std::move(vals));
  }
  Eigen::MatrixXd ens(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i) ens.row(i) = rows[i].transpose();
  return PosteriorField::from_ensemble(std::move(points), std::move(ens));
}

void write_histogram_csv(const Histogram& hist, std::ostream& os) {
  os << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b)
    os << fmt_g17(hist.bin_edges[b]) << ',' << fmt_g17(hist.bin_edges[b + 1])
       << ',' << hist.counts[b] << '\n';
}

}  // namespace mopinn

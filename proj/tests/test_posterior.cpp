#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/errors.hpp"
#include "core/posterior.hpp"

#include <cmath>
#include <sstream>

using namespace mopinn;

TEST_CASE("from_ensemble: population statistics") {
  Eigen::MatrixXd ens(2, 3);
  ens << 1.0, 2.0, 3.0,
         5.0, 5.0, 5.0;
  const auto field = PosteriorField::from_ensemble({{0.0, 0.0}, {1.0, 0.0}},
                                                   ens);
  CHECK(field.mean[0] == doctest::Approx(2.0));
  CHECK(field.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(field.mean[1] == doctest::Approx(5.0));
  CHECK(field.stddev[1] == doctest::Approx(0.0));

  CHECK_THROWS_AS(PosteriorField::from_ensemble({}, Eigen::MatrixXd()),
                  ConfigError);
}

TEST_CASE("summarize evaluates the network over the grid") {
  LayerParams layer;
  layer.weights.resize(2, 1);
  layer.weights << 1.0, 2.0;  // replicas x and 2x
  layer.biases = Eigen::VectorXd::Zero(2);
  const MlpNetwork net({layer});
  const auto field = summarize(net, {{1.0, 0.0}, {3.0, 0.0}});
  CHECK(field.ensemble(0, 0) == doctest::Approx(1.0));
  CHECK(field.ensemble(0, 1) == doctest::Approx(2.0));
  CHECK(field.mean[1] == doctest::Approx(4.5));
}

TEST_CASE("coverage: inside vs outside the two-sigma band") {
  Eigen::MatrixXd ens(2, 2);
  ens << 0.0, 2.0,   // mean 1, std 1
         0.0, 2.0;
  const auto field = PosteriorField::from_ensemble({{0.0, 0.0}, {1.0, 0.0}},
                                                   ens);
  const auto cov = coverage(field, {2.9, 3.1});  // band is [-1, 3]
  CHECK(cov.covered[0]);
  CHECK_FALSE(cov.covered[1]);
  CHECK(cov.fraction == doctest::Approx(0.5));
  CHECK_THROWS_AS(coverage(field, {1.0}), ConfigError);
}

TEST_CASE("k histogram: equal-width bins over [min, max]") {
  Eigen::VectorXd k(4);
  k << 0.0, 1.0, 2.0, 3.0;
  const auto hist = k_histogram(k, 2);
  REQUIRE(hist.bin_edges.size() == 3);
  CHECK(hist.bin_edges[0] == doctest::Approx(0.0));
  CHECK(hist.bin_edges[1] == doctest::Approx(1.5));
  CHECK(hist.bin_edges[2] == doctest::Approx(3.0));
  CHECK(hist.counts == std::vector<int>{2, 2});
  CHECK(hist.mean == doctest::Approx(1.5));
  CHECK(hist.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK_THROWS_AS(k_histogram(Eigen::VectorXd(), 2), ConfigError);
}

TEST_CASE("empirical quantile uses the nearest-rank rule") {
  Eigen::VectorXd sample(3);
  sample << 3.0, 1.0, 2.0;
  CHECK(empirical_quantile(sample, 0.1) == doctest::Approx(1.0));
  CHECK(empirical_quantile(sample, 0.5) == doctest::Approx(2.0));
  CHECK(empirical_quantile(sample, 2.0 / 3.0) == doctest::Approx(2.0));
  CHECK(empirical_quantile(sample, 0.67) == doctest::Approx(3.0));
  CHECK(empirical_quantile(sample, 1.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(empirical_quantile(sample, 0.0), ConfigError);
  CHECK_THROWS_AS(empirical_quantile(sample, 1.5), ConfigError);
}

TEST_CASE("qq: identity and shift") {
  const auto fractions = default_qq_fractions();
  REQUIRE(fractions.size() == 10);
  CHECK(fractions.front() == doctest::Approx(0.1));
  CHECK(fractions.back() == doctest::Approx(1.0));

  Eigen::VectorXd a(50);
  for (int i = 0; i < 50; ++i) a[i] = std::sin(3.0 * i) * (i % 7);
  const Eigen::VectorXd b = a.array() + 0.75;

  for (const auto& [qa, qa2] : qq_points(a, a, fractions))
    CHECK(qa == doctest::Approx(qa2));
  for (const auto& [qa, qb] : qq_points(a, b, fractions))
    CHECK(qb == doctest::Approx(qa + 0.75));

  // quantiles are monotone in the fraction
  double prev = -1e300;
  for (const auto& [qa, qb] : qq_points(a, b, fractions)) {
    CHECK(qa >= prev);
    prev = qa;
  }
}

TEST_CASE("evaluation grids") {
  const Domain d1 = domain_of(PdeFamily::Linear1D);
  const auto g1 = eval_grid_1d(d1, 201);
  REQUIRE(g1.size() == 201);
  CHECK(g1.front().x == doctest::Approx(-0.7));
  CHECK(g1.back().x == doctest::Approx(0.7));

  const Domain d2 = domain_of(PdeFamily::AllenCahn2D);
  const auto g2 = eval_grid_2d(d2, 11);
  REQUIRE(g2.size() == 121);
  CHECK(g2.front().x == doctest::Approx(-1.0));
  CHECK(g2.back().y == doctest::Approx(1.0));
}

TEST_CASE("ensemble csv round trip, 1d and 2d") {
  Eigen::MatrixXd ens(2, 3);
  ens << 0.25, -1.75, 3.0,
         1e-17, 2.0, -0.125;
  const auto field = PosteriorField::from_ensemble(
      {{0.1, 0.0}, {0.2, 0.0}}, ens);

  std::stringstream ss;
  write_ensemble_csv(field, 1, ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "x,v0,v1,v2");
  ss.seekg(0);
  const auto back = read_ensemble_csv(ss);
  CHECK(back.ensemble == field.ensemble);
  CHECK(back.eval_points[1].x == 0.2);

  const auto field2 = PosteriorField::from_ensemble({{0.1, -0.5}}, ens.topRows(1));
  std::stringstream s2;
  write_ensemble_csv(field2, 2, s2);
  std::getline(s2, header);
  CHECK(header == "x,y,v0,v1,v2");
  s2.seekg(0);
  const auto back2 = read_ensemble_csv(s2);
  CHECK(back2.eval_points[0].y == -0.5);
  CHECK(back2.ensemble == field2.ensemble);

  std::stringstream bad("nope\n");
  CHECK_THROWS_AS(read_ensemble_csv(bad), ConfigError);
}

TEST_CASE("posterior and histogram csv headers") {
  Eigen::MatrixXd ens(1, 2);
  ens << 1.0, 3.0;
  const auto field = PosteriorField::from_ensemble({{0.0, 0.0}}, ens);
  const auto cov = coverage(field, {2.0});
  std::stringstream ss;
  write_posterior_csv(field, {2.0}, cov, 1, ss);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "x,exact,mean,std,covered");
  std::getline(ss, line);
  CHECK(line == "0,2,2,1,1");

  Histogram h;
  h.bin_edges = {0.0, 0.5, 1.0};
  h.counts = {3, 4};
  std::stringstream hs;
  write_histogram_csv(h, hs);
  std::getline(hs, line);
  CHECK(line == "bin_left,bin_right,count");
  std::getline(hs, line);
  CHECK(line == "0,0.5,3");
}

TEST_CASE("convergence study runs one training per M") {
  TrainConfig base;
  base.epochs = 50;
  base.replica_count = 2;  // overwritten per M
  base.u_shape = {1, 6, 2};
  base.f_shape = {1, 6, 2};
  base.pde.family = PdeFamily::Linear1D;
  base.pde.lambda = 0.01;
  base.domain = domain_of(base.pde.family);
  base.stencil = {1e-3, 1};
  base.collocation = uniform_collocation(base.domain, base.stencil, 11);
  base.seed = 3;

  NoiseSpec noise{0.1, 0.1};
  std::vector<Measurement> ms(2);
  ms[0] = {{-0.35, 0.0}, 0.4, Quantity::U};
  ms[1] = {{0.35, 0.0}, -0.2, Quantity::U};

  const auto grid = eval_grid_1d(base.domain, 21);
  const auto rows = convergence_in_m(base, ms, noise, grid, {2, 4});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].replica_count == 2);
  CHECK(rows[1].replica_count == 4);
  CHECK(rows[0].delta_mean == 0.0);
  CHECK(rows[1].delta_mean > 0.0);
  CHECK(std::isfinite(rows[1].delta_std));
  CHECK(rows[1].u_field.ensemble.cols() == 4);

  CHECK_THROWS_AS(convergence_in_m(base, ms, noise, grid, {4, 2}), ConfigError);
}

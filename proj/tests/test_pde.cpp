#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/errors.hpp"
#include "core/pde.hpp"

#include <cmath>

using namespace mopinn;

namespace {

constexpr double kPi = 3.14159265358979323846;

FieldFn scalar_field(std::function<double(const Point&)> fn, int m = 1) {
  return [fn = std::move(fn), m](const Point& p) {
    return Eigen::VectorXd::Constant(m, fn(p));
  };
}

// u = sin^3(6x); u'' = 216 sin(6x) - 324 sin^3(6x)
double cubed_sine(double x) {
  const double s = std::sin(6.0 * x);
  return s * s * s;
}
double cubed_sine_d2(double x) {
  const double s = std::sin(6.0 * x);
  return 216.0 * s - 324.0 * s * s * s;
}

}  // namespace

TEST_CASE("domains per family") {
  const Domain d1 = domain_of(PdeFamily::Linear1D);
  CHECK(d1.dim == 1);
  CHECK(d1.xmin == -0.7);
  CHECK(d1.xmax == 0.7);
  const Domain d2 = domain_of(PdeFamily::AllenCahn2D);
  CHECK(d2.dim == 2);
  CHECK(d2.xmin == -1.0);
  CHECK(d2.ymax == 1.0);
  CHECK(d2.contains({0.3, -0.9}));
  CHECK_FALSE(d2.contains({0.3, -1.1}));
}

TEST_CASE("reaction terms and their partials") {
  PdeKind lin{PdeFamily::Linear1D, 0.01};
  CHECK(reaction_value(lin, 0.0, 2.0) == 0.0);
  CHECK(reaction_du(lin, 0.0, 2.0) == 0.0);
  CHECK(reaction_dk(lin, 2.0) == 0.0);

  PdeKind nl{PdeFamily::NonlinearTanh1D, 0.01};
  const double u = 0.4, k = 0.7;
  CHECK(reaction_value(nl, k, u) == doctest::Approx(k * std::tanh(u)));
  CHECK(reaction_dk(nl, u) == doctest::Approx(std::tanh(u)));

  PdeKind ac{PdeFamily::AllenCahn2D, 0.0001};
  CHECK(reaction_value(ac, 0.0, 0.5) == doctest::Approx(0.5 * (0.25 - 1.0)));
  CHECK(reaction_value(ac, 0.0, 1.0) == 0.0);

  PdeKind qr{PdeFamily::QuadraticReaction2D, 0.0001};
  CHECK(reaction_value(qr, 3.0, 0.5) == doctest::Approx(0.75));
  CHECK(reaction_dk(qr, 0.5) == doctest::Approx(0.25));

  // du partials against central differences
  for (const auto& pde : {nl, ac, qr}) {
    const double step = 1e-6;
    const double fd = (reaction_value(pde, k, u + step) -
                       reaction_value(pde, k, u - step)) /
                      (2 * step);
    CHECK(reaction_du(pde, k, u) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("pde residual vanishes for a quadratic (stencil-exact) solution") {
  // lambda u'' = f with u = 3x^2 - x + 2: central difference is exact
  PdeKind pde{PdeFamily::Linear1D, 0.01};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-3, 1};
  const auto u = scalar_field([](const Point& p) {
    return 3.0 * p.x * p.x - p.x + 2.0;
  });
  const auto f = scalar_field([&](const Point&) { return pde.lambda * 6.0; });
  const Eigen::VectorXd r =
      residual_pde(u, f, Eigen::VectorXd(), pde, st, domain, {0.25, 0.0});
  CHECK(std::abs(r[0]) < 1e-8);
}

TEST_CASE("pde residual truncation on the manufactured 1D solution") {
  // |r| <= lambda * h^2/12 * max|u''''|; max|u''''| ~ 2.7e4 for sin^3(6x),
  // so the bound is about 2.3e-5
  PdeKind pde{PdeFamily::Linear1D, 0.01};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-3, 1};
  const auto u = scalar_field([](const Point& p) { return cubed_sine(p.x); });
  const auto f = scalar_field([&](const Point& p) {
    return pde.lambda * cubed_sine_d2(p.x);
  });
  for (double x : {-0.6, -0.21, 0.0, 0.1, 0.45, 0.699}) {
    const Eigen::VectorXd r =
        residual_pde(u, f, Eigen::VectorXd(), pde, st, domain, {x, 0.0});
    CHECK(std::abs(r[0]) < 2.5e-5);
  }
}

TEST_CASE("allen-cahn residual is exactly zero for u == 1, f == 0") {
  PdeKind pde{PdeFamily::AllenCahn2D, 0.0001};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-2, 2};
  const auto u = scalar_field([](const Point&) { return 1.0; }, 3);
  const auto f = scalar_field([](const Point&) { return 0.0; }, 3);
  const Eigen::VectorXd r =
      residual_pde(u, f, Eigen::VectorXd(), pde, st, domain, {0.2, -0.4});
  CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("2d manufactured solution satisfies the 5-point laplacian closely") {
  // u = sin(pi x) sin(pi y); laplacian = -2 pi^2 u
  PdeKind pde{PdeFamily::AllenCahn2D, 0.0001};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-2, 2};
  const auto uval = [](const Point& p) {
    return std::sin(kPi * p.x) * std::sin(kPi * p.y);
  };
  const auto u = scalar_field(uval);
  const auto f = scalar_field([&](const Point& p) {
    const double v = uval(p);
    return pde.lambda * (-2.0 * kPi * kPi * v) + v * (v * v - 1.0);
  });
  // truncation <= lambda * h^2/12 * 2 pi^4 |u| ~ 1.6e-7
  for (const Point p : {Point{0.3, 0.3}, Point{-0.5, 0.25}, Point{0.0, 0.9}}) {
    const Eigen::VectorXd r =
        residual_pde(u, f, Eigen::VectorXd(), pde, st, domain, p);
    CHECK(std::abs(r[0]) < 2e-7);
  }
}

TEST_CASE("residuals act per replica, independently") {
  PdeKind pde{PdeFamily::NonlinearTanh1D, 0.01, true};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-3, 1};
  // replica j: u_j(x) = j * x^2
  const FieldFn u = [](const Point& p) {
    Eigen::VectorXd v(3);
    for (int j = 0; j < 3; ++j) v[j] = j * p.x * p.x;
    return v;
  };
  const FieldFn f = [](const Point&) { return Eigen::VectorXd::Zero(3); };
  Eigen::VectorXd k(3);
  k << 0.1, 0.2, 0.3;
  const Point p{0.5, 0.0};
  const Eigen::VectorXd r = residual_pde(u, f, k, pde, st, domain, p);
  for (int j = 0; j < 3; ++j) {
    const double expected =
        pde.lambda * 2.0 * j + k[j] * std::tanh(j * 0.25);
    CHECK(r[j] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("essential and measurement residuals are direct mismatches") {
  const FieldFn u = [](const Point& p) {
    Eigen::VectorXd v(2);
    v << p.x, 2.0 * p.x;
    return v;
  };
  const Eigen::VectorXd re = residual_essential(u, {0.5, 0.0}, 0.3);
  CHECK(re[0] == doctest::Approx(0.2));
  CHECK(re[1] == doctest::Approx(0.7));

  Eigen::VectorXd targets(2);
  targets << 0.4, 1.1;
  const Eigen::VectorXd rm = residual_measurement(u, {0.5, 0.0}, targets);
  CHECK(rm[0] == doctest::Approx(0.1));
  CHECK(rm[1] == doctest::Approx(-0.1));

  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(residual_measurement(u, {0.5, 0.0}, wrong), ConfigError);
}

TEST_CASE("natural residual: one-sided slope exact for quadratics") {
  const Domain domain = domain_of(PdeFamily::Linear1D);
  const Stencil st{1e-3, 1};
  const auto u = scalar_field([](const Point& p) { return p.x * p.x; });
  // left end, slope toward +x
  NaturalPoint left{{-0.7, 0.0}, 2.0 * -0.7, 0, +1};
  CHECK(std::abs(residual_natural(u, left, st, domain)[0]) < 1e-9);
  // right end, stencil reaches inward (-x)
  NaturalPoint right{{0.7, 0.0}, 2.0 * 0.7, 0, -1};
  CHECK(std::abs(residual_natural(u, right, st, domain)[0]) < 1e-9);
  // wrong orientation exits the domain
  NaturalPoint bad{{0.7, 0.0}, 0.0, 0, +1};
  CHECK_THROWS_AS(residual_natural(u, bad, st, domain), ConfigError);
}

TEST_CASE("uniform collocation: counts, insets, validation") {
  const Domain d1 = domain_of(PdeFamily::Linear1D);
  const Stencil st{1e-3, 1};
  const auto set = uniform_collocation(d1, st, 201);
  REQUIRE(set.interior.size() == 201);
  CHECK(set.interior.front().x == doctest::Approx(-0.7 + 1e-3));
  CHECK(set.interior.back().x == doctest::Approx(0.7 - 1e-3));

  const Domain d2 = domain_of(PdeFamily::AllenCahn2D);
  const Stencil st2{1e-2, 2};
  CHECK(uniform_collocation(d2, st2, 21).interior.size() == 441);

  CollocationSet bad;
  bad.interior.push_back({0.7, 0.0});  // stencil would exit
  CHECK_THROWS_AS(bad.validate(d1, st), ConfigError);
}

TEST_CASE("stencil support and config validation errors") {
  PdeKind pde{PdeFamily::Linear1D, 0.01};
  const Domain domain = domain_of(pde.family);
  const Stencil st{1e-3, 1};
  const auto u = scalar_field([](const Point&) { return 0.0; });
  CHECK_THROWS_AS(
      residual_pde(u, u, Eigen::VectorXd(), pde, st, domain, {0.7, 0.0}),
      ConfigError);

  PdeKind bad_lambda{PdeFamily::Linear1D, 0.0};
  CHECK_THROWS_AS(bad_lambda.validate(), ConfigError);
  PdeKind bad_k{PdeFamily::Linear1D, 0.01, true};
  CHECK_THROWS_AS(bad_k.validate(), ConfigError);

  // trainable k with wrong array length
  PdeKind nl{PdeFamily::NonlinearTanh1D, 0.01, true};
  const auto u3 = scalar_field([](const Point&) { return 0.0; }, 3);
  CHECK_THROWS_AS(residual_pde(u3, u3, Eigen::VectorXd::Zero(2), nl, st,
                               domain, {0.0, 0.0}),
                  ConfigError);
}

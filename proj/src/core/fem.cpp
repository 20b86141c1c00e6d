#include "core/fem.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mopinn {

Mesh1D Mesh1D::uniform(double a, double b, int node_count) {
  if (node_count < 2) throw ConfigError("mesh needs at least 2 nodes");
  if (!(b > a)) throw ConfigError("mesh interval is empty");
  Mesh1D mesh;
  mesh.nodes.resize(node_count);
  for (int i = 0; i < node_count; ++i)
    mesh.nodes[i] = a + (b - a) * static_cast<double>(i) / (node_count - 1);
  return mesh;
}

Eigen::VectorXd solve_tridiagonal(TridiagonalSystem sys) {
  const auto n = sys.diag.size();
  if (sys.sub.size() != n - 1 || sys.super.size() != n - 1 ||
      sys.rhs.size() != n)
    throw ConfigError("tridiagonal system shape mismatch");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (sys.diag[i - 1] == 0.0) throw NumericalError("singular tridiagonal system");
    const double w = sys.sub[i - 1] / sys.diag[i - 1];
    sys.diag[i] -= w * sys.super[i - 1];
    sys.rhs[i] -= w * sys.rhs[i - 1];
  }
  if (sys.diag[n - 1] == 0.0) throw NumericalError("singular tridiagonal system");
  Eigen::VectorXd x(n);
  x[n - 1] = sys.rhs[n - 1] / sys.diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i)
    x[i] = (sys.rhs[i] - sys.super[i] * x[i + 1]) / sys.diag[i];
  return x;
}

double interpolate_f_linear(const std::vector<Measurement>& f_measurements,
                            double x) {
  std::vector<const Measurement*> pts;
  for (const auto& m : f_measurements)
    if (m.quantity == Quantity::F) pts.push_back(&m);
  if (pts.size() < 2) throw ConfigError("need at least 2 f measurements");
  std::sort(pts.begin(), pts.end(), [](const auto* a, const auto* b) {
    return a->location.x < b->location.x;
  });
  const double lo = pts.front()->location.x;
  const double hi = pts.back()->location.x;
  if (x < lo - 1e-12 || x > hi + 1e-12)
    throw ConfigError("x outside the f measurement hull");
  x = std::clamp(x, lo, hi);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x0 = pts[i]->location.x;
    const double x1 = pts[i + 1]->location.x;
    if (x <= x1 || i + 2 == pts.size()) {
      const double t = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.0;
      return (1.0 - t) * pts[i]->value + t * pts[i + 1]->value;
    }
  }
  return pts.back()->value;
}

Eigen::VectorXd fem_solve(const Mesh1D& mesh, double lambda,
                          const std::function<double(double)>& f, double u_left,
                          double u_right) {
  if (lambda <= 0.0) throw ConfigError("lambda must be > 0");
  const auto n = mesh.nodes.size();
  TridiagonalSystem sys;
  sys.sub = Eigen::VectorXd::Zero(n - 1);
  sys.diag = Eigen::VectorXd::Zero(n);
  sys.super = Eigen::VectorXd::Zero(n - 1);
  sys.rhs = Eigen::VectorXd::Zero(n);

  // weak form of lambda u'' = f: lambda int(u' v') = -int(f v)
  const double gauss = 1.0 / std::sqrt(3.0);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double x0 = mesh.nodes[e];
    const double x1 = mesh.nodes[e + 1];
    const double he = x1 - x0;
    const double ke = lambda / he;
    sys.diag[e] += ke;
    sys.diag[e + 1] += ke;
    sys.sub[e] -= ke;
    sys.super[e] -= ke;
    const double xc = 0.5 * (x0 + x1);
    for (double xi : {-gauss, gauss}) {
      const double xg = xc + 0.5 * he * xi;
      const double w = 0.5 * he;
      const double phi0 = (x1 - xg) / he;
      const double phi1 = (xg - x0) / he;
      const double fv = f(xg);
      sys.rhs[e] -= w * fv * phi0;
      sys.rhs[e + 1] -= w * fv * phi1;
    }
  }

  // strongly imposed Dirichlet ends
  sys.rhs[1] -= sys.sub[0] * u_left;
  sys.rhs[n - 2] -= sys.super[n - 2] * u_right;
  sys.diag[0] = 1.0;
  sys.super[0] = 0.0;
  sys.sub[0] = 0.0;
  sys.diag[n - 1] = 1.0;
  sys.sub[n - 2] = 0.0;
  sys.super[n - 2] = 0.0;
  sys.rhs[0] = u_left;
  sys.rhs[n - 1] = u_right;

  return solve_tridiagonal(std::move(sys));
}

PosteriorField fem_mc_ensemble(const std::vector<Measurement>& measurements,
                               const NoiseSpec& noise, int ensemble_size,
                               const Mesh1D& mesh, double lambda,
                               std::uint64_t seed) {
  if (ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
  std::vector<Measurement> u_meas, f_meas;
  for (const auto& m : measurements)
    (m.quantity == Quantity::U ? u_meas : f_meas).push_back(m);
  if (u_meas.size() < 2) throw ConfigError("need u measurements at both ends");
  std::sort(u_meas.begin(), u_meas.end(),
            [](const auto& a, const auto& b) { return a.location.x < b.location.x; });

  const auto n = mesh.nodes.size();
  Eigen::MatrixXd ensemble(n, ensemble_size);
  for (int member = 0; member < ensemble_size; ++member) {
    auto rng = make_engine(derive_seed(seed, 0xfe0 + member));
    std::normal_distribution<double> unit(0.0, 1.0);
    const double bc_left = u_meas.front().value + noise.sigma_u * unit(rng);
    const double bc_right = u_meas.back().value + noise.sigma_u * unit(rng);
    std::vector<Measurement> f_draw = f_meas;
    for (auto& m : f_draw) m.value += noise.sigma_f * unit(rng);
    const auto f_fn = [&f_draw](double x) {
      return interpolate_f_linear(f_draw, x);
    };
    ensemble.col(member) = fem_solve(mesh, lambda, f_fn, bc_left, bc_right);
  }

  std::vector<Point> points;
  points.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) points.push_back({mesh.nodes[i], 0.0});
  return PosteriorField::from_ensemble(std::move(points), std::move(ensemble));
}

}  // namespace mopinn

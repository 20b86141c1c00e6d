#pragma once

#include "core/data_gen.hpp"
#include "core/posterior.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace mopinn {

struct Mesh1D {
  Eigen::VectorXd nodes;  // strictly increasing, endpoints at the domain ends

  static Mesh1D uniform(double a, double b, int node_count);
  int element_count() const { return static_cast<int>(nodes.size()) - 1; }
};

struct TridiagonalSystem {
  Eigen::VectorXd sub;   // n-1
  Eigen::VectorXd diag;  // n
  Eigen::VectorXd super; // n-1
  Eigen::VectorXd rhs;   // n
};

// Thomas algorithm, no pivoting.
Eigen::VectorXd solve_tridiagonal(TridiagonalSystem sys);

// Piecewise-linear interpolation through the f measurement points.
double interpolate_f_linear(const std::vector<Measurement>& f_measurements,
                            double x);

// Galerkin linear-element solution of lambda * u'' = f with Dirichlet ends;
// load integrals by 2-point Gauss quadrature per element.
Eigen::VectorXd fem_solve(const Mesh1D& mesh, double lambda,
                          const std::function<double(double)>& f, double u_left,
                          double u_right);

// Monte Carlo ensemble of FEM solves. Each member adds a fresh bootstrap
// noise draw to the observed measurement values (the same expansion the
// replica datasets use), then solves with linearly interpolated f and the
// two u-end measurements as Dirichlet data.
PosteriorField fem_mc_ensemble(const std::vector<Measurement>& measurements,
                               const NoiseSpec& noise, int ensemble_size,
                               const Mesh1D& mesh, double lambda,
                               std::uint64_t seed);

}  // namespace mopinn

#pragma once

#include "core/nn.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mopinn {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Domain {
  int dim = 1;
  double xmin = 0.0, xmax = 1.0;
  double ymin = 0.0, ymax = 1.0;

  bool contains(const Point& p, double tol = 1e-12) const;
};

enum class PdeFamily { Linear1D, NonlinearTanh1D, AllenCahn2D, QuadraticReaction2D };

// PDE definition. The reaction term per family:
//   Linear1D:            0
//   NonlinearTanh1D:     k * tanh(u)
//   AllenCahn2D:         u * (u^2 - 1)
//   QuadraticReaction2D: k * u^2
struct PdeKind {
  PdeFamily family = PdeFamily::Linear1D;
  double lambda = 0.01;
  bool k_trainable = false;
  double k_fixed = 0.0;  // true coefficient; also used when not trainable

  int spatial_dim() const;
  bool has_reaction_coefficient() const;  // families with a free k
  void validate() const;
};

Domain domain_of(PdeFamily family);

struct Stencil {
  double h = 1e-3;
  int dimension = 1;
};

struct EssentialPoint {
  Point location;
  double target = 0.0;  // h(x)
};

// Natural (Neumann) boundary point: the slope along `axis` (0=x, 1=y) is
// prescribed; `inward` is +1 when the domain extends in the positive axis
// direction from the point, -1 otherwise.
struct NaturalPoint {
  Point location;
  double target = 0.0;  // g(x)
  int axis = 0;
  int inward = 1;
};

struct CollocationSet {
  std::vector<Point> interior;
  std::vector<EssentialPoint> essential;
  std::vector<NaturalPoint> natural;

  // interior points must sit at least h inside the domain; stencil points
  // may touch the closed boundary but not exit it.
  void validate(const Domain& domain, const Stencil& stencil) const;
};

CollocationSet uniform_collocation(const Domain& domain, const Stencil& stencil,
                                   int points_per_axis);

// Evaluates all M replica outputs at a point.
using FieldFn = std::function<Eigen::VectorXd(const Point&)>;

FieldFn field_of(const MlpNetwork& net);

// Per-replica reaction value and partials at a scalar u.
double reaction_value(const PdeKind& pde, double k, double u);
double reaction_du(const PdeKind& pde, double k, double u);
double reaction_dk(const PdeKind& pde, double u);

// Strong-form PDE residual per replica: lambda * D2 u + reaction(u) - f,
// D2 the central second difference (5-point Laplacian in 2D).
Eigen::VectorXd residual_pde(const FieldFn& u, const FieldFn& f,
                             const Eigen::VectorXd& k_values,
                             const PdeKind& pde, const Stencil& stencil,
                             const Domain& domain, const Point& point);

Eigen::VectorXd residual_essential(const FieldFn& u, const Point& point,
                                   double target_h);

// Second-order one-sided 3-point slope minus the target.
Eigen::VectorXd residual_natural(const FieldFn& u, const NaturalPoint& bp,
                                 const Stencil& stencil, const Domain& domain);

Eigen::VectorXd residual_measurement(const FieldFn& net, const Point& point,
                                     const Eigen::VectorXd& replica_targets);

}  // namespace mopinn

#include "core/pde.hpp"

#include "core/errors.hpp"

#include <cmath>

namespace mopinn {

bool Domain::contains(const Point& p, double tol) const {
  if (p.x < xmin - tol || p.x > xmax + tol) return false;
  if (dim == 2 && (p.y < ymin - tol || p.y > ymax + tol)) return false;
  return true;
}

int PdeKind::spatial_dim() const {
  switch (family) {
    case PdeFamily::Linear1D:
    case PdeFamily::NonlinearTanh1D:
      return 1;
    case PdeFamily::AllenCahn2D:
    case PdeFamily::QuadraticReaction2D:
      return 2;
  }
  return 1;
}

bool PdeKind::has_reaction_coefficient() const {
  return family == PdeFamily::NonlinearTanh1D ||
         family == PdeFamily::QuadraticReaction2D;
}

void PdeKind::validate() const {
  if (lambda <= 0.0) throw ConfigError("lambda must be > 0");
  if (k_trainable && !has_reaction_coefficient())
    throw ConfigError("this PDE family has no trainable coefficient");
}

Domain domain_of(PdeFamily family) {
  Domain d;
  switch (family) {
    case PdeFamily::Linear1D:
    case PdeFamily::NonlinearTanh1D:
      d.dim = 1;
      d.xmin = -0.7;
      d.xmax = 0.7;
      break;
    case PdeFamily::AllenCahn2D:
    case PdeFamily::QuadraticReaction2D:
      d.dim = 2;
      d.xmin = d.ymin = -1.0;
      d.xmax = d.ymax = 1.0;
      break;
  }
  return d;
}

void CollocationSet::validate(const Domain& domain,
                              const Stencil& stencil) const {
  const double h = stencil.h;
  if (h <= 0.0) throw ConfigError("stencil step must be > 0");
  for (const auto& p : interior) {
    bool ok = p.x >= domain.xmin + h - 1e-12 && p.x <= domain.xmax - h + 1e-12;
    if (domain.dim == 2)
      ok = ok && p.y >= domain.ymin + h - 1e-12 && p.y <= domain.ymax - h + 1e-12;
    if (!ok) throw ConfigError("interior collocation point too close to boundary");
  }
  for (const auto& e : essential)
    if (!domain.contains(e.location))
      throw ConfigError("essential boundary point outside domain");
  for (const auto& n : natural) {
    Point far = n.location;
    const double step = 2.0 * h * n.inward;
    if (n.axis == 0)
      far.x += step;
    else
      far.y += step;
    if (!domain.contains(n.location) || !domain.contains(far))
      throw ConfigError("natural boundary stencil exits domain");
  }
}

CollocationSet uniform_collocation(const Domain& domain, const Stencil& stencil,
                                   int points_per_axis) {
  if (points_per_axis < 2) throw ConfigError("need >= 2 collocation points per axis");
  const double h = stencil.h;
  CollocationSet set;
  const auto linspace = [](double a, double b, int n, int i) {
    return a + (b - a) * static_cast<double>(i) / (n - 1);
  };
  if (domain.dim == 1) {
    for (int i = 0; i < points_per_axis; ++i)
      set.interior.push_back(
          {linspace(domain.xmin + h, domain.xmax - h, points_per_axis, i), 0.0});
  } else {
    for (int i = 0; i < points_per_axis; ++i)
      for (int j = 0; j < points_per_axis; ++j)
        set.interior.push_back(
            {linspace(domain.xmin + h, domain.xmax - h, points_per_axis, i),
             linspace(domain.ymin + h, domain.ymax - h, points_per_axis, j)});
  }
  set.validate(domain, stencil);
  return set;
}

FieldFn field_of(const MlpNetwork& net) {
  const int dim = net.input_dim();
  return [&net, dim](const Point& p) {
    Eigen::VectorXd x(dim);
    x[0] = p.x;
    if (dim == 2) x[1] = p.y;
    return net.forward(x);
  };
}

double reaction_value(const PdeKind& pde, double k, double u) {
  switch (pde.family) {
    case PdeFamily::Linear1D:
      return 0.0;
    case PdeFamily::NonlinearTanh1D:
      return k * std::tanh(u);
    case PdeFamily::AllenCahn2D:
      return u * (u * u - 1.0);
    case PdeFamily::QuadraticReaction2D:
      return k * u * u;
  }
  return 0.0;
}

double reaction_du(const PdeKind& pde, double k, double u) {
  switch (pde.family) {
    case PdeFamily::Linear1D:
      return 0.0;
    case PdeFamily::NonlinearTanh1D: {
      const double t = std::tanh(u);
      return k * (1.0 - t * t);
    }
    case PdeFamily::AllenCahn2D:
      return 3.0 * u * u - 1.0;
    case PdeFamily::QuadraticReaction2D:
      return 2.0 * k * u;
  }
  return 0.0;
}

double reaction_dk(const PdeKind& pde, double u) {
  switch (pde.family) {
    case PdeFamily::NonlinearTanh1D:
      return std::tanh(u);
    case PdeFamily::QuadraticReaction2D:
      return u * u;
    default:
      return 0.0;
  }
}

namespace {

void check_stencil_support(const Domain& domain, const Stencil& stencil,
                           const Point& p) {
  const double h = stencil.h;
  if (!domain.contains({p.x - h, p.y}) || !domain.contains({p.x + h, p.y}))
    throw ConfigError("stencil exits domain");
  if (domain.dim == 2 &&
      (!domain.contains({p.x, p.y - h}) || !domain.contains({p.x, p.y + h})))
    throw ConfigError("stencil exits domain");
}

}  // namespace

Eigen::VectorXd residual_pde(const FieldFn& u, const FieldFn& f,
                             const Eigen::VectorXd& k_values,
                             const PdeKind& pde, const Stencil& stencil,
                             const Domain& domain, const Point& point) {
  pde.validate();
  check_stencil_support(domain, stencil, point);
  const double h = stencil.h;
  const Eigen::VectorXd uc = u(point);
  const int m = static_cast<int>(uc.size());
  if (pde.k_trainable && k_values.size() != m)
    throw ConfigError("trainable k array must have length M");

  Eigen::VectorXd d2 = (u({point.x - h, point.y}) + u({point.x + h, point.y}) -
                        2.0 * uc) /
                       (h * h);
  if (domain.dim == 2)
    d2 += (u({point.x, point.y - h}) + u({point.x, point.y + h}) - 2.0 * uc) /
          (h * h);

  Eigen::VectorXd r = pde.lambda * d2 - f(point);
  for (int j = 0; j < m; ++j) {
    const double kj = pde.k_trainable ? k_values[j] : pde.k_fixed;
    r[j] += reaction_value(pde, kj, uc[j]);
  }
  return r;
}

Eigen::VectorXd residual_essential(const FieldFn& u, const Point& point,
                                   double target_h) {
  return u(point).array() - target_h;
}

Eigen::VectorXd residual_natural(const FieldFn& u, const NaturalPoint& bp,
                                 const Stencil& stencil, const Domain& domain) {
  const double h = stencil.h;
  const double d = static_cast<double>(bp.inward);
  Point p1 = bp.location, p2 = bp.location;
  if (bp.axis == 0) {
    p1.x += d * h;
    p2.x += 2.0 * d * h;
  } else {
    p1.y += d * h;
    p2.y += 2.0 * d * h;
  }
  if (!domain.contains(bp.location) || !domain.contains(p2))
    throw ConfigError("one-sided stencil exits domain");
  Eigen::VectorXd slope =
      d * (-3.0 * u(bp.location) + 4.0 * u(p1) - u(p2)) / (2.0 * h);
  return slope.array() - bp.target;
}

Eigen::VectorXd residual_measurement(const FieldFn& net, const Point& point,
                                     const Eigen::VectorXd& replica_targets) {
  Eigen::VectorXd out = net(point);
  if (out.size() != replica_targets.size())
    throw ConfigError("replica target length must equal M");
  return out - replica_targets;
}

}  // namespace mopinn

#include "core/data_gen.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mopinn {

namespace {

constexpr double kPi = std::numbers::pi;

double u_exact_1d(double x) {
  const double s = std::sin(6.0 * x);
  return s * s * s;
}

double d2u_exact_1d(double x) {
  const double s = std::sin(6.0 * x);
  const double c = std::cos(6.0 * x);
  return 216.0 * s * c * c - 108.0 * s * s * s;
}

double u_exact_2d(double x, double y) {
  return std::sin(kPi * x) * std::sin(kPi * y);
}

}  // namespace

ManufacturedValues manufactured_solution(const PdeKind& pde,
                                         const Domain& domain, const Point& p) {
  if (!domain.contains(p)) throw ConfigError("point outside domain");
  ManufacturedValues v;
  switch (pde.family) {
    case PdeFamily::Linear1D:
      v.u = u_exact_1d(p.x);
      v.f = pde.lambda * d2u_exact_1d(p.x);
      break;
    case PdeFamily::NonlinearTanh1D:
      v.u = u_exact_1d(p.x);
      v.f = pde.lambda * d2u_exact_1d(p.x) + pde.k_fixed * std::tanh(v.u);
      break;
    case PdeFamily::AllenCahn2D: {
      v.u = u_exact_2d(p.x, p.y);
      const double lap = -2.0 * kPi * kPi * v.u;
      v.f = pde.lambda * lap + v.u * (v.u * v.u - 1.0);
      break;
    }
    case PdeFamily::QuadraticReaction2D: {
      v.u = u_exact_2d(p.x, p.y);
      const double lap = -2.0 * kPi * kPi * v.u;
      v.f = pde.lambda * lap + pde.k_fixed * v.u * v.u;
      break;
    }
  }
  return v;
}

std::vector<Measurement> sample_measurements(const PdeKind& pde,
                                             const Domain& domain, Quantity q,
                                             const MeasurementLayout& layout,
                                             const NoiseSpec& noise,
                                             std::uint64_t seed) {
  std::vector<Point> locations;
  if (const auto* eq = std::get_if<EquallySpaced>(&layout)) {
    if (eq->count < 1) throw ConfigError("measurement count must be >= 1");
    if (eq->count == 1) {
      locations.push_back({0.5 * (eq->a + eq->b), 0.0});
    } else {
      for (int i = 0; i < eq->count; ++i)
        locations.push_back(
            {eq->a + (eq->b - eq->a) * static_cast<double>(i) / (eq->count - 1),
             0.0});
    }
  } else if (const auto* ur = std::get_if<UniformRandom>(&layout)) {
    if (ur->count < 1) throw ConfigError("measurement count must be >= 1");
    auto rng = make_engine(derive_seed(seed, 0x10c));
    std::uniform_real_distribution<double> ux(ur->region.xmin, ur->region.xmax);
    std::uniform_real_distribution<double> uy(ur->region.ymin, ur->region.ymax);
    for (int i = 0; i < ur->count; ++i) {
      Point p;
      p.x = ux(rng);
      if (ur->region.dim == 2) p.y = uy(rng);
      locations.push_back(p);
    }
  } else if (const auto* be = std::get_if<BoundaryEqual>(&layout)) {
    if (be->count_per_edge < 1) throw ConfigError("measurement count must be >= 1");
    if (domain.dim != 2) throw ConfigError("boundary_equal layout needs a 2D domain");
    const int n = be->count_per_edge;
    for (int i = 0; i < n; ++i) {
      const double tx =
          domain.xmin + (domain.xmax - domain.xmin) * (n == 1 ? 0.5 : i / double(n - 1));
      const double ty =
          domain.ymin + (domain.ymax - domain.ymin) * (n == 1 ? 0.5 : i / double(n - 1));
      locations.push_back({tx, domain.ymin});
      locations.push_back({tx, domain.ymax});
      locations.push_back({domain.xmin, ty});
      locations.push_back({domain.xmax, ty});
    }
  }

  auto rng = make_engine(derive_seed(seed, 0x5ea));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sigma = noise.sigma_for(q);
  std::vector<Measurement> out;
  out.reserve(locations.size());
  for (const auto& loc : locations) {
    const auto exact = manufactured_solution(pde, domain, loc);
    Measurement m;
    m.location = loc;
    m.quantity = q;
    m.value = (q == Quantity::U ? exact.u : exact.f) + sigma * unit(rng);
    out.push_back(m);
  }
  return out;
}

ReplicaDataset expand_to_replicas(std::vector<Measurement> measurements,
                                  const NoiseSpec& noise, int replica_count,
                                  std::uint64_t seed) {
  if (replica_count < 1) throw ConfigError("replica count must be >= 1");
  ReplicaDataset ds;
  ds.measurements = std::move(measurements);
  ds.rng_seed = seed;
  const int n = static_cast<int>(ds.measurements.size());
  ds.replica_targets.resize(n, replica_count);
  auto rng = make_engine(derive_seed(seed, 0xb007));
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double sigma = noise.sigma_for(ds.measurements[i].quantity);
    for (int j = 0; j < replica_count; ++j)
      ds.replica_targets(i, j) = ds.measurements[i].value + sigma * unit(rng);
  }
  return ds;
}

void write_dataset(const ReplicaDataset& ds, int dim, std::ostream& os) {
  const int n = static_cast<int>(ds.measurements.size());
  os << "mopinn-dataset 1 dim=" << dim << " M=" << ds.replica_count()
     << " seed=" << ds.rng_seed << " n=" << n << '\n';
  for (const auto& m : ds.measurements) {
    os << (m.quantity == Quantity::U ? 'u' : 'f') << ' '
       << fmt_g17(m.location.x);
    if (dim == 2) os << ' ' << fmt_g17(m.location.y);
    os << ' ' << fmt_g17(m.value) << '\n';
  }
  os << "targets\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ds.replica_count(); ++j) {
      if (j) os << ' ';
      os << fmt_g17(ds.replica_targets(i, j));
    }
    os << '\n';
  }
}

ReplicaDataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty dataset file");
  int dim = 0, m_count = 0, n = 0;
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "mopinn-dataset 1 dim=%d M=%d seed=%llu n=%d",
                  &dim, &m_count, &seed, &n) != 4)
    throw ConfigError("bad dataset header");
  ReplicaDataset ds;
  ds.rng_seed = seed;
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw ConfigError("truncated dataset");
    std::istringstream ls(line);
    char q;
    Measurement m;
    ls >> q >> m.location.x;
    if (dim == 2) ls >> m.location.y;
    ls >> m.value;
    if (!ls || (q != 'u' && q != 'f')) throw ConfigError("bad measurement row");
    m.quantity = q == 'u' ? Quantity::U : Quantity::F;
    ds.measurements.push_back(m);
  }
  if (!std::getline(is, line) || line != "targets")
    throw ConfigError("missing targets block");
  ds.replica_targets.resize(n, m_count);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw ConfigError("truncated targets block");
    std::istringstream ls(line);
    for (int j = 0; j < m_count; ++j)
      if (!(ls >> ds.replica_targets(i, j)))
        throw ConfigError("bad targets row");
  }
  return ds;
}

}  // namespace mopinn

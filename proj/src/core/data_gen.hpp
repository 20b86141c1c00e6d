#pragma once

#include "core/pde.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

namespace mopinn {

enum class Quantity { U, F };

struct Measurement {
  Point location;
  double value = 0.0;
  Quantity quantity = Quantity::U;
};

struct NoiseSpec {
  double sigma_u = 0.0;
  double sigma_f = 0.0;

  double sigma_for(Quantity q) const {
    return q == Quantity::U ? sigma_u : sigma_f;
  }
};

// Noisy measurements expanded to M per-replica targets: bootstrap draws
// around each observed value, independent per (measurement, replica).
struct ReplicaDataset {
  std::vector<Measurement> measurements;
  Eigen::MatrixXd replica_targets;  // n_measurements x M
  std::uint64_t rng_seed = 0;

  int replica_count() const { return static_cast<int>(replica_targets.cols()); }
};

struct ManufacturedValues {
  double u = 0.0;
  double f = 0.0;
};

// Exact u and the source f obtained by substituting u into the PDE
// (method of manufactured solutions). u = sin^3(6x) in 1D,
// sin(pi x) sin(pi y) in 2D.
ManufacturedValues manufactured_solution(const PdeKind& pde,
                                         const Domain& domain, const Point& p);

// Measurement layouts.
struct EquallySpaced {  // endpoint-inclusive linspace on a 1D segment
  int count = 0;
  double a = 0.0, b = 0.0;
};
struct UniformRandom {  // uniform over a rectangle (or segment)
  int count = 0;
  Domain region;
};
struct BoundaryEqual {  // 2D: equally spaced points on each of the 4 edges
  int count_per_edge = 0;
};
using MeasurementLayout = std::variant<EquallySpaced, UniformRandom, BoundaryEqual>;

std::vector<Measurement> sample_measurements(const PdeKind& pde,
                                             const Domain& domain, Quantity q,
                                             const MeasurementLayout& layout,
                                             const NoiseSpec& noise,
                                             std::uint64_t seed);

ReplicaDataset expand_to_replicas(std::vector<Measurement> measurements,
                                  const NoiseSpec& noise, int replica_count,
                                  std::uint64_t seed);

// Delimited text table: header, per-measurement rows, then the replica
// target matrix. Round-trips exactly.
void write_dataset(const ReplicaDataset& ds, int dim, std::ostream& os);
ReplicaDataset read_dataset(std::istream& is);

}  // namespace mopinn

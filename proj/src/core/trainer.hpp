#pragma once

#include "core/data_gen.hpp"
#include "core/nn.hpp"
#include "core/pde.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mopinn {

struct LossWeights {
  double pde = 1.0;
  double essential = 1.0;
  double natural = 1.0;
  double meas_u = 1.0;
  double meas_f = 1.0;
  double prior_mean = 1.0;
  double prior_std = 1.0;
};

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  AdamParams params;

  AdamState(Eigen::Index n, AdamParams p)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), params(p) {}
};

// One full ADAM update with bias correction, in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
               AdamState& state);

// Ensemble mean/std targets at fixed locations, added to the loss (u only).
struct PriorStatsConstraint {
  std::vector<Point> locations;
  Eigen::VectorXd target_means;
  std::optional<Eigen::VectorXd> target_stds;

  void validate() const;
};

struct TrainConfig {
  int epochs = 10000;
  double learning_rate = 1e-3;
  int replica_count = 500;  // M
  std::vector<int> u_shape;  // includes input dim; last entry == M
  std::vector<int> f_shape;
  PdeKind pde;
  Domain domain;
  Stencil stencil;
  CollocationSet collocation;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;  // 0 -> use seed
  std::optional<PriorStatsConstraint> prior;

  void validate() const;
  std::uint64_t effective_init_seed() const {
    return init_seed ? init_seed : seed;
  }
};

// Weighted loss components; each family is mean-squared over its points and
// replicas, with the family weight already applied. total is their sum.
struct LossBreakdown {
  double total = 0.0;
  double pde = 0.0;
  double essential = 0.0;
  double natural = 0.0;
  double meas_u = 0.0;
  double meas_f = 0.0;
  double prior_mean = 0.0;
  double prior_std = 0.0;

  // name of the first non-finite component, or nullptr if all finite
  const char* first_non_finite() const;
};

// Precomputes the evaluation-point layout for the full-batch loss so the
// per-epoch work is two forward/backward sweeps plus cheap bookkeeping.
class LossAssembler {
 public:
  LossAssembler(const TrainConfig& config, const ReplicaDataset& data);

  LossBreakdown evaluate(const MlpNetwork& u_net, const MlpNetwork& f_net,
                         const Eigen::VectorXd& k, GradientBuffer* grad_u,
                         GradientBuffer* grad_f, Eigen::VectorXd* grad_k) const;

 private:
  int m_ = 0;
  int dim_ = 1;
  PdeKind pde_;
  Stencil stencil_;
  LossWeights weights_;
  std::optional<PriorStatsConstraint> prior_;

  Eigen::MatrixXd xu_;  // u-net evaluation points
  Eigen::MatrixXd xf_;  // f-net evaluation points
  int n_interior_ = 0;
  int u_stride_ = 3;  // rows per interior point: center, x-h, x+h (+y pair in 2D)
  int ess_base_ = 0;
  std::vector<double> ess_targets_;
  int nat_base_ = 0;
  std::vector<NaturalPoint> naturals_;
  int umeas_base_ = 0;
  Eigen::MatrixXd u_targets_;
  int prior_base_ = 0;
  Eigen::MatrixXd f_targets_;  // f measurement rows start at n_interior_ in xf_
};

// Spec-level one-shot wrapper around LossAssembler.
LossBreakdown assemble_loss(const TrainConfig& config,
                            const ReplicaDataset& data,
                            const MlpNetwork& u_net, const MlpNetwork& f_net,
                            const Eigen::VectorXd& k, GradientBuffer* grad_u,
                            GradientBuffer* grad_f, Eigen::VectorXd* grad_k);

struct TrainState {
  MlpNetwork u_net;
  MlpNetwork f_net;
  Eigen::VectorXd k;  // empty unless the PDE coefficient is trainable
  std::vector<LossBreakdown> history;
};

TrainState train(const TrainConfig& config, const ReplicaDataset& data);

// Loss trace: one CSV line per epoch with the weighted components.
void write_loss_trace(const std::vector<LossBreakdown>& history,
                      std::ostream& os);

void save_checkpoint(const TrainState& state, std::ostream& os);
TrainState load_checkpoint(std::istream& is);

}  // namespace mopinn

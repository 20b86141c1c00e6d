#include "core/trainer.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mopinn {

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ConfigError("adam_step: shape mismatch");
  const auto& p = state.params;
  state.step += 1;
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * grads;
  state.v.array() =
      p.beta2 * state.v.array() + (1.0 - p.beta2) * grads.array().square();
  const double m_corr = 1.0 - std::pow(p.beta1, double(state.step));
  const double v_corr = 1.0 - std::pow(p.beta2, double(state.step));
  params.array() -= p.learning_rate * (state.m.array() / m_corr) /
                    ((state.v.array() / v_corr).sqrt() + p.epsilon);
}

void PriorStatsConstraint::validate() const {
  if (locations.empty()) throw ConfigError("prior constraint has no locations");
  if (target_means.size() != static_cast<Eigen::Index>(locations.size()))
    throw ConfigError("prior means do not match location count");
  if (target_stds) {
    if (target_stds->size() != target_means.size())
      throw ConfigError("prior stds do not match location count");
    if ((target_stds->array() <= 0.0).any())
      throw ConfigError("prior stds must be > 0");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (replica_count < 1) throw ConfigError("replica count must be >= 1");
  pde.validate();
  if (u_shape.size() < 2 || f_shape.size() < 2)
    throw ConfigError("network shapes need at least two entries");
  if (u_shape.front() != domain.dim || f_shape.front() != domain.dim)
    throw ConfigError("network input dim must match the domain");
  if (u_shape.back() != replica_count || f_shape.back() != replica_count)
    throw ConfigError("network output dim must equal the replica count M");
  if (prior) prior->validate();
  collocation.validate(domain, stencil);
}

const char* LossBreakdown::first_non_finite() const {
  const struct {
    const char* name;
    double value;
  } parts[] = {{"pde", pde},           {"essential", essential},
               {"natural", natural},   {"meas_u", meas_u},
               {"meas_f", meas_f},     {"prior_mean", prior_mean},
               {"prior_std", prior_std}};
  for (const auto& p : parts)
    if (!std::isfinite(p.value)) return p.name;
  if (!std::isfinite(total)) return "total";
  return nullptr;
}

namespace {

Eigen::RowVectorXd to_row(const Point& p, int dim) {
  Eigen::RowVectorXd r(dim);
  r[0] = p.x;
  if (dim == 2) r[1] = p.y;
  return r;
}

}  // namespace

LossAssembler::LossAssembler(const TrainConfig& config,
                             const ReplicaDataset& data) {
  config.validate();
  m_ = config.replica_count;
  pde_ = config.pde;
  stencil_ = config.stencil;
  weights_ = config.weights;
  prior_ = config.prior;
  dim_ = config.domain.dim;
  if (data.replica_targets.rows() > 0 && data.replica_count() != m_)
    throw ConfigError("dataset replica count does not match config M");

  const auto& colloc = config.collocation;
  n_interior_ = static_cast<int>(colloc.interior.size());
  u_stride_ = 1 + 2 * dim_;
  naturals_ = colloc.natural;

  std::vector<Measurement> u_meas, f_meas;
  std::vector<int> u_rows, f_rows;
  for (int i = 0; i < static_cast<int>(data.measurements.size()); ++i) {
    if (data.measurements[i].quantity == Quantity::U) {
      u_meas.push_back(data.measurements[i]);
      u_rows.push_back(i);
    } else {
      f_meas.push_back(data.measurements[i]);
      f_rows.push_back(i);
    }
  }
  u_targets_.resize(static_cast<int>(u_rows.size()), m_);
  for (int i = 0; i < static_cast<int>(u_rows.size()); ++i)
    u_targets_.row(i) = data.replica_targets.row(u_rows[i]);
  f_targets_.resize(static_cast<int>(f_rows.size()), m_);
  for (int i = 0; i < static_cast<int>(f_rows.size()); ++i)
    f_targets_.row(i) = data.replica_targets.row(f_rows[i]);

  const int n_prior = prior_ ? static_cast<int>(prior_->locations.size()) : 0;
  const int rows_u = n_interior_ * u_stride_ +
                     static_cast<int>(colloc.essential.size()) +
                     3 * static_cast<int>(naturals_.size()) +
                     static_cast<int>(u_meas.size()) + n_prior;
  xu_.resize(rows_u, dim_);
  int r = 0;
  const double h = stencil_.h;
  for (const auto& p : colloc.interior) {
    xu_.row(r++) = to_row(p, dim_);
    xu_.row(r++) = to_row({p.x - h, p.y}, dim_);
    xu_.row(r++) = to_row({p.x + h, p.y}, dim_);
    if (dim_ == 2) {
      xu_.row(r++) = to_row({p.x, p.y - h}, dim_);
      xu_.row(r++) = to_row({p.x, p.y + h}, dim_);
    }
  }
  ess_base_ = r;
  for (const auto& e : colloc.essential) {
    ess_targets_.push_back(e.target);
    xu_.row(r++) = to_row(e.location, dim_);
  }
  nat_base_ = r;
  for (const auto& nb : naturals_) {
    const double d = static_cast<double>(nb.inward);
    Point p1 = nb.location, p2 = nb.location;
    if (nb.axis == 0) {
      p1.x += d * h;
      p2.x += 2.0 * d * h;
    } else {
      p1.y += d * h;
      p2.y += 2.0 * d * h;
    }
    xu_.row(r++) = to_row(nb.location, dim_);
    xu_.row(r++) = to_row(p1, dim_);
    xu_.row(r++) = to_row(p2, dim_);
  }
  umeas_base_ = r;
  for (const auto& m : u_meas) xu_.row(r++) = to_row(m.location, dim_);
  prior_base_ = r;
  if (prior_)
    for (const auto& p : prior_->locations) xu_.row(r++) = to_row(p, dim_);

  xf_.resize(n_interior_ + static_cast<int>(f_meas.size()), dim_);
  r = 0;
  for (const auto& p : colloc.interior) xf_.row(r++) = to_row(p, dim_);
  for (const auto& m : f_meas) xf_.row(r++) = to_row(m.location, dim_);
}

LossBreakdown LossAssembler::evaluate(const MlpNetwork& u_net,
                                      const MlpNetwork& f_net,
                                      const Eigen::VectorXd& k,
                                      GradientBuffer* grad_u,
                                      GradientBuffer* grad_f,
                                      Eigen::VectorXd* grad_k) const {
  if (u_net.output_dim() != m_ || f_net.output_dim() != m_)
    throw ConfigError("network output dim does not match M");
  if (pde_.k_trainable && k.size() != m_)
    throw ConfigError("trainable k array must have length M");
  const bool want_grads = grad_u != nullptr;
  if (want_grads && (grad_f == nullptr ||
                     (pde_.k_trainable && grad_k == nullptr)))
    throw ConfigError("gradient buffers incomplete");

  ForwardTrace tu, tf;
  const Eigen::MatrixXd U = u_net.forward_batch(xu_, tu);
  const Eigen::MatrixXd F = f_net.forward_batch(xf_, tf);
  Eigen::MatrixXd cu, cf;
  if (want_grads) {
    cu = Eigen::MatrixXd::Zero(U.rows(), m_);
    cf = Eigen::MatrixXd::Zero(F.rows(), m_);
    grad_u->set_zero();
    grad_f->set_zero();
    if (grad_k) grad_k->setZero();
  }

  LossBreakdown out;
  const double h = stencil_.h;
  const double inv_h2 = 1.0 / (h * h);
  const Eigen::ArrayXd k_arr =
      pde_.k_trainable ? Eigen::ArrayXd(k.array())
                       : Eigen::ArrayXd(Eigen::ArrayXd::Constant(m_, pde_.k_fixed));

  // PDE residuals over interior collocation points
  if (n_interior_ > 0 && weights_.pde > 0.0) {
    const double fac = weights_.pde / (double(n_interior_) * m_);
    double sum_sq = 0.0;
    Eigen::ArrayXd reaction(m_), d_react_du(m_);
    for (int i = 0; i < n_interior_; ++i) {
      const int c = i * u_stride_;
      const Eigen::ArrayXd uc = U.row(c).transpose().array();
      Eigen::ArrayXd d2 =
          (U.row(c + 1) + U.row(c + 2) - 2.0 * U.row(c)).transpose().array() *
          inv_h2;
      if (dim_ == 2)
        d2 += (U.row(c + 3) + U.row(c + 4) - 2.0 * U.row(c))
                  .transpose()
                  .array() *
              inv_h2;
      switch (pde_.family) {
        case PdeFamily::Linear1D:
          reaction.setZero();
          d_react_du.setZero();
          break;
        case PdeFamily::NonlinearTanh1D: {
          const Eigen::ArrayXd t = uc.tanh();
          reaction = k_arr * t;
          d_react_du = k_arr * (1.0 - t.square());
          break;
        }
        case PdeFamily::AllenCahn2D:
          reaction = uc.cube() - uc;
          d_react_du = 3.0 * uc.square() - 1.0;
          break;
        case PdeFamily::QuadraticReaction2D:
          reaction = k_arr * uc.square();
          d_react_du = 2.0 * k_arr * uc;
          break;
      }
      const Eigen::ArrayXd res =
          pde_.lambda * d2 + reaction - F.row(i).transpose().array();
      sum_sq += res.square().sum();
      if (want_grads) {
        const Eigen::ArrayXd g = 2.0 * fac * res;
        const Eigen::RowVectorXd g_row = g.matrix().transpose();
        const double neighbor = pde_.lambda * inv_h2;
        const double center = -2.0 * dim_ * pde_.lambda * inv_h2;
        cu.row(c + 1) += neighbor * g_row;
        cu.row(c + 2) += neighbor * g_row;
        if (dim_ == 2) {
          cu.row(c + 3) += neighbor * g_row;
          cu.row(c + 4) += neighbor * g_row;
        }
        cu.row(c) += (g * (center + d_react_du)).matrix().transpose();
        cf.row(i) -= g_row;
        if (pde_.k_trainable && grad_k) {
          switch (pde_.family) {
            case PdeFamily::NonlinearTanh1D:
              grad_k->array() += g * uc.tanh();
              break;
            case PdeFamily::QuadraticReaction2D:
              grad_k->array() += g * uc.square();
              break;
            default:
              break;
          }
        }
      }
    }
    out.pde = fac * sum_sq;
  }

  // essential boundary residuals
  const int n_ess = static_cast<int>(ess_targets_.size());
  if (n_ess > 0 && weights_.essential > 0.0) {
    const double fac = weights_.essential / (double(n_ess) * m_);
    double sum_sq = 0.0;
    for (int i = 0; i < n_ess; ++i) {
      const Eigen::RowVectorXd res =
          U.row(ess_base_ + i).array() - ess_targets_[i];
      sum_sq += res.squaredNorm();
      if (want_grads) cu.row(ess_base_ + i) += 2.0 * fac * res;
    }
    out.essential = fac * sum_sq;
  }

  // natural boundary residuals
  const int n_nat = static_cast<int>(naturals_.size());
  if (n_nat > 0 && weights_.natural > 0.0) {
    const double fac = weights_.natural / (double(n_nat) * m_);
    double sum_sq = 0.0;
    for (int i = 0; i < n_nat; ++i) {
      const int b = nat_base_ + 3 * i;
      const double d = static_cast<double>(naturals_[i].inward);
      const double c0 = -3.0 * d / (2.0 * h);
      const double c1 = 4.0 * d / (2.0 * h);
      const double c2 = -d / (2.0 * h);
      const Eigen::RowVectorXd res =
          (c0 * U.row(b) + c1 * U.row(b + 1) + c2 * U.row(b + 2)).array() -
          naturals_[i].target;
      sum_sq += res.squaredNorm();
      if (want_grads) {
        const Eigen::RowVectorXd g = 2.0 * fac * res;
        cu.row(b) += c0 * g;
        cu.row(b + 1) += c1 * g;
        cu.row(b + 2) += c2 * g;
      }
    }
    out.natural = fac * sum_sq;
  }

  // measurement residuals
  const int n_um = static_cast<int>(u_targets_.rows());
  if (n_um > 0 && weights_.meas_u > 0.0) {
    const double fac = weights_.meas_u / (double(n_um) * m_);
    double sum_sq = 0.0;
    for (int i = 0; i < n_um; ++i) {
      const Eigen::RowVectorXd res = U.row(umeas_base_ + i) - u_targets_.row(i);
      sum_sq += res.squaredNorm();
      if (want_grads) cu.row(umeas_base_ + i) += 2.0 * fac * res;
    }
    out.meas_u = fac * sum_sq;
  }
  const int n_fm = static_cast<int>(f_targets_.rows());
  if (n_fm > 0 && weights_.meas_f > 0.0) {
    const double fac = weights_.meas_f / (double(n_fm) * m_);
    double sum_sq = 0.0;
    for (int i = 0; i < n_fm; ++i) {
      const Eigen::RowVectorXd res =
          F.row(n_interior_ + i) - f_targets_.row(i);
      sum_sq += res.squaredNorm();
      if (want_grads) cf.row(n_interior_ + i) += 2.0 * fac * res;
    }
    out.meas_f = fac * sum_sq;
  }

  // prior ensemble-statistics terms
  if (prior_) {
    const int n_p = static_cast<int>(prior_->locations.size());
    const double fac_m = weights_.prior_mean / n_p;
    const double fac_s = weights_.prior_std / n_p;
    double sum_m = 0.0, sum_s = 0.0;
    for (int i = 0; i < n_p; ++i) {
      const int row = prior_base_ + i;
      const Eigen::ArrayXd vals = U.row(row).transpose().array();
      const double mean = vals.mean();
      if (weights_.prior_mean > 0.0) {
        const double rm = mean - prior_->target_means[i];
        sum_m += rm * rm;
        if (want_grads)
          cu.row(row).array() += 2.0 * fac_m * rm / m_;
      }
      if (prior_->target_stds && weights_.prior_std > 0.0) {
        const Eigen::ArrayXd dev = vals - mean;
        // population std with an epsilon floor inside the root
        const double s = std::sqrt(dev.square().mean() + 1e-12);
        const double rs = s - (*prior_->target_stds)[i];
        sum_s += rs * rs;
        if (want_grads)
          cu.row(row).array() +=
              (2.0 * fac_s * rs / (m_ * s)) * dev.transpose();
      }
    }
    out.prior_mean = fac_m * sum_m;
    out.prior_std = fac_s * sum_s;
  }

  out.total = out.pde + out.essential + out.natural + out.meas_u + out.meas_f +
              out.prior_mean + out.prior_std;

  if (want_grads) {
    u_net.backward_batch(tu, cu, *grad_u);
    f_net.backward_batch(tf, cf, *grad_f);
  }
  return out;
}

LossBreakdown assemble_loss(const TrainConfig& config,
                            const ReplicaDataset& data,
                            const MlpNetwork& u_net, const MlpNetwork& f_net,
                            const Eigen::VectorXd& k, GradientBuffer* grad_u,
                            GradientBuffer* grad_f, Eigen::VectorXd* grad_k) {
  LossAssembler assembler(config, data);
  return assembler.evaluate(u_net, f_net, k, grad_u, grad_f, grad_k);
}

TrainState train(const TrainConfig& config, const ReplicaDataset& data) {
  config.validate();
  const std::uint64_t init_seed = config.effective_init_seed();

  TrainState state;
  state.u_net = MlpNetwork::xavier_normal(config.u_shape,
                                          derive_seed(init_seed, 0x1d1));
  state.f_net = MlpNetwork::xavier_normal(config.f_shape,
                                          derive_seed(init_seed, 0x1d2));
  const int m = config.replica_count;
  if (config.pde.k_trainable) {
    auto rng = make_engine(derive_seed(init_seed, 0x1d3));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    state.k.resize(m);
    for (int j = 0; j < m; ++j) state.k[j] = u01(rng);
  }

  LossAssembler assembler(config, data);

  const Eigen::Index nu = static_cast<Eigen::Index>(state.u_net.parameter_count());
  const Eigen::Index nf = static_cast<Eigen::Index>(state.f_net.parameter_count());
  const Eigen::Index nk = state.k.size();
  Eigen::VectorXd theta(nu + nf + nk);
  theta.segment(0, nu) = state.u_net.flatten();
  theta.segment(nu, nf) = state.f_net.flatten();
  if (nk > 0) theta.segment(nu + nf, nk) = state.k;

  AdamParams adam_params;
  adam_params.learning_rate = config.learning_rate;
  AdamState adam(theta.size(), adam_params);

  GradientBuffer gu = state.u_net.zero_gradients();
  GradientBuffer gf = state.f_net.zero_gradients();
  Eigen::VectorXd gk(nk);
  Eigen::VectorXd grads(theta.size());

  state.history.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    state.u_net.unflatten(theta.segment(0, nu));
    state.f_net.unflatten(theta.segment(nu, nf));
    if (nk > 0) state.k = theta.segment(nu + nf, nk);

    const LossBreakdown loss = assembler.evaluate(
        state.u_net, state.f_net, state.k, &gu, &gf, nk > 0 ? &gk : nullptr);
    state.history.push_back(loss);
    if (const char* family = loss.first_non_finite()) {
      std::ostringstream msg;
      msg << "non-finite " << family << " loss component at epoch " << epoch;
      throw NumericalError(msg.str());
    }

    grads.segment(0, nu) = flatten_gradients(gu);
    grads.segment(nu, nf) = flatten_gradients(gf);
    if (nk > 0) grads.segment(nu + nf, nk) = gk;
    adam_step(theta, grads, adam);

    if ((epoch + 1) % 250 == 0 && !theta.allFinite())
      throw NumericalError("non-finite parameters after epoch " +
                           std::to_string(epoch));
  }

  state.u_net.unflatten(theta.segment(0, nu));
  state.f_net.unflatten(theta.segment(nu, nf));
  if (nk > 0) state.k = theta.segment(nu + nf, nk);
  if (!theta.allFinite())
    throw NumericalError("non-finite parameters at end of training");
  return state;
}

void write_loss_trace(const std::vector<LossBreakdown>& history,
                      std::ostream& os) {
  os << "epoch,total,pde,essential,natural,meas_u,meas_f,prior_mean,prior_std\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& l = history[e];
    os << e << ',' << fmt_g17(l.total) << ',' << fmt_g17(l.pde) << ','
       << fmt_g17(l.essential) << ',' << fmt_g17(l.natural) << ','
       << fmt_g17(l.meas_u) << ',' << fmt_g17(l.meas_f) << ','
       << fmt_g17(l.prior_mean) << ',' << fmt_g17(l.prior_std) << '\n';
  }
}

void save_checkpoint(const TrainState& state, std::ostream& os) {
  os << "mopinn-checkpoint 1\n";
  state.u_net.save(os);
  state.f_net.save(os);
  os << "k " << state.k.size() << '\n';
  os.write(reinterpret_cast<const char*>(state.k.data()),
           static_cast<std::streamsize>(state.k.size() * sizeof(double)));
}

TrainState load_checkpoint(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "mopinn-checkpoint 1")
    throw ConfigError("bad checkpoint header");
  TrainState state;
  state.u_net = MlpNetwork::load(is);
  state.f_net = MlpNetwork::load(is);
  std::getline(is, line);
  long nk = -1;
  if (std::sscanf(line.c_str(), "k %ld", &nk) != 1 || nk < 0)
    throw ConfigError("bad checkpoint k header");
  state.k.resize(nk);
  is.read(reinterpret_cast<char*>(state.k.data()),
          static_cast<std::streamsize>(nk * sizeof(double)));
  if (!is && nk > 0) throw ConfigError("truncated checkpoint");
  return state;
}

}  // namespace mopinn

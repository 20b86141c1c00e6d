#include "core/nn.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace mopinn {

void GradientBuffer::set_zero() {
  for (auto& w : weight_grads) w.setZero();
  for (auto& b : bias_grads) b.setZero();
}

void GradientBuffer::add(const GradientBuffer& other) {
  if (other.weight_grads.size() != weight_grads.size())
    throw ConfigError("gradient buffer layer count mismatch");
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    weight_grads[l] += other.weight_grads[l];
    bias_grads[l] += other.bias_grads[l];
  }
}

MlpNetwork::MlpNetwork(std::vector<LayerParams> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].in_dim() < 1 || layers_[l].out_dim() < 1)
      throw ConfigError("layer dimensions must be >= 1");
    if (layers_[l].biases.size() != layers_[l].out_dim())
      throw ConfigError("bias length does not match layer out_dim");
    if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim())
      throw ConfigError("adjacent layer dimensions are incompatible");
  }
}

MlpNetwork MlpNetwork::xavier_normal(const std::vector<int>& dims,
                                     std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw ConfigError("layer dimensions must be >= 1");

  auto rng = make_engine(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<LayerParams> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double std_dev = std::sqrt(2.0 / (fan_in + fan_out));
    LayerParams p;
    p.weights.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) p.weights(r, c) = std_dev * unit(rng);
    p.biases = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(p));
  }
  return MlpNetwork(std::move(layers));
}

int MlpNetwork::input_dim() const { return layers_.front().in_dim(); }

int MlpNetwork::output_dim() const { return layers_.back().out_dim(); }

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    n += static_cast<std::size_t>(l.weights.size()) + l.biases.size();
  return n;
}

Eigen::VectorXd MlpNetwork::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim())
    throw ConfigError("forward: input dimension mismatch");
  Eigen::MatrixXd row = x.transpose();
  return forward_batch(row).row(0).transpose();
}

Eigen::MatrixXd MlpNetwork::forward_batch(const Eigen::MatrixXd& x) const {
  ForwardTrace trace;
  return forward_batch(x, trace);
}

Eigen::MatrixXd MlpNetwork::forward_batch(const Eigen::MatrixXd& x,
                                          ForwardTrace& trace) const {
  if (x.cols() != input_dim())
    throw ConfigError("forward_batch: input dimension mismatch");
  trace.activations.clear();
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = trace.activations.back();
    Eigen::MatrixXd z = a * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].biases.transpose();
    if (l + 1 < layers_.size()) z = z.array().tanh();
    trace.activations.push_back(std::move(z));
  }
  return trace.activations.back();
}

void MlpNetwork::backward_batch(const ForwardTrace& trace,
                                const Eigen::MatrixXd& cotangent,
                                GradientBuffer& out) const {
  const auto L = layers_.size();
  if (trace.activations.size() != L + 1)
    throw ConfigError("backward_batch: trace does not match network");
  if (cotangent.rows() != trace.activations[0].rows() ||
      cotangent.cols() != output_dim())
    throw ConfigError("backward_batch: cotangent shape mismatch");
  if (out.weight_grads.size() != L)
    throw ConfigError("backward_batch: gradient buffer shape mismatch");

  Eigen::MatrixXd g = cotangent;  // dL/d(output of layer l)
  for (std::size_t l = L; l-- > 0;) {
    const auto& a_prev = trace.activations[l];
    out.weight_grads[l].noalias() += g.transpose() * a_prev;
    out.bias_grads[l] += g.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd g_prev = g * layers_[l].weights;
      // tanh'(z) = 1 - a^2 with a the stored activation of layer l-1
      g_prev.array() *= 1.0 - a_prev.array().square();
      g = std::move(g_prev);
    }
  }
}

GradientBuffer MlpNetwork::backward(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& cotangent) const {
  if (cotangent.size() != output_dim())
    throw ConfigError("backward: cotangent length must equal output_dim");
  ForwardTrace trace;
  forward_batch(x.transpose(), trace);
  GradientBuffer g = zero_gradients();
  backward_batch(trace, cotangent.transpose(), g);
  return g;
}

GradientBuffer MlpNetwork::zero_gradients() const {
  GradientBuffer g;
  g.weight_grads.reserve(layers_.size());
  g.bias_grads.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.weight_grads.push_back(
        Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias_grads.push_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return g;
}

Eigen::VectorXd MlpNetwork::flatten() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index i = 0;
  for (const auto& l : layers_) {
    for (int r = 0; r < l.weights.rows(); ++r)
      for (int c = 0; c < l.weights.cols(); ++c) theta[i++] = l.weights(r, c);
    for (int r = 0; r < l.biases.size(); ++r) theta[i++] = l.biases[r];
  }
  return theta;
}

void MlpNetwork::unflatten(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw ConfigError("unflatten: parameter count mismatch");
  Eigen::Index i = 0;
  for (auto& l : layers_) {
    for (int r = 0; r < l.weights.rows(); ++r)
      for (int c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = theta[i++];
    for (int r = 0; r < l.biases.size(); ++r) l.biases[r] = theta[i++];
  }
}

bool MlpNetwork::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
  return true;
}

Eigen::VectorXd flatten_gradients(const GradientBuffer& g) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < g.weight_grads.size(); ++l)
    n += static_cast<std::size_t>(g.weight_grads[l].size()) +
         g.bias_grads[l].size();
  Eigen::VectorXd flat(n);
  Eigen::Index i = 0;
  for (std::size_t l = 0; l < g.weight_grads.size(); ++l) {
    const auto& w = g.weight_grads[l];
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) flat[i++] = w(r, c);
    for (int r = 0; r < g.bias_grads[l].size(); ++r)
      flat[i++] = g.bias_grads[l][r];
  }
  return flat;
}

void MlpNetwork::save(std::ostream& os) const {
  os << "mopinn-net 1";
  os << ' ' << input_dim();
  for (const auto& l : layers_) os << ' ' << l.out_dim();
  os << '\n';
  const Eigen::VectorXd theta = flatten();
  os.write(reinterpret_cast<const char*>(theta.data()),
           static_cast<std::streamsize>(theta.size() * sizeof(double)));
}

MlpNetwork MlpNetwork::load(std::istream& is) {
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  hs >> magic >> version;
  if (magic != "mopinn-net" || version != 1)
    throw ConfigError("bad network snapshot header");
  std::vector<int> dims;
  int d;
  while (hs >> d) dims.push_back(d);
  if (dims.size() < 2) throw ConfigError("bad network snapshot dims");

  std::vector<LayerParams> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerParams p;
    p.weights = Eigen::MatrixXd::Zero(dims[l + 1], dims[l]);
    p.biases = Eigen::VectorXd::Zero(dims[l + 1]);
    layers.push_back(std::move(p));
  }
  MlpNetwork net(std::move(layers));
  Eigen::VectorXd theta(net.parameter_count());
  is.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!is) throw ConfigError("truncated network snapshot");
  net.unflatten(theta);
  return net;
}

}  // namespace mopinn

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace mopinn {

// One dense layer: y = W x + b, W is out_dim x in_dim.
struct LayerParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

// Per-layer gradients with the same shapes as the network parameters.
struct GradientBuffer {
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;

  void set_zero();
  void add(const GradientBuffer& other);
};

// Cached per-layer activations from a batched forward pass. activations[0]
// holds the inputs, activations[l] the output of layer l (post-activation).
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;
};

// Fully connected network, tanh on hidden layers, affine output layer.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<LayerParams> layers);

  // Weights ~ N(0, 2/(fan_in+fan_out)), biases zero. dims includes the
  // input dimension, e.g. {1, 20, 40, 500}.
  static MlpNetwork xavier_normal(const std::vector<int>& dims,
                                  std::uint64_t seed);

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;

  const std::vector<LayerParams>& layers() const { return layers_; }
  std::vector<LayerParams>& layers() { return layers_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Rows of x are input points; returns n_points x output_dim.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x,
                                ForwardTrace& trace) const;

  // Gradients of L = sum_j cotangent(i,j) * output_j(point i) with respect
  // to all parameters, accumulated into out.
  void backward_batch(const ForwardTrace& trace,
                      const Eigen::MatrixXd& cotangent,
                      GradientBuffer& out) const;

  // Single-point convenience wrapper over the batched path.
  GradientBuffer backward(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& cotangent) const;

  GradientBuffer zero_gradients() const;

  // Flat parameter vector, per layer: weights row-major, then biases.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& theta);

  bool all_finite() const;

  // Snapshot format: one ASCII header line with the layer dims, then the
  // flat parameter vector as little-endian 64-bit floats.
  void save(std::ostream& os) const;
  static MlpNetwork load(std::istream& is);

 private:
  std::vector<LayerParams> layers_;
};

Eigen::VectorXd flatten_gradients(const GradientBuffer& g);

}  // namespace mopinn

#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace evsched::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class InitMode {
  FanInScaledNormal,  // N(0,1) / sqrt(fan_in); default, keeps wide nets stable
  StandardNormal,     // literal N(0,1) draws
};

struct Gradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;

  void set_zero();
  double norm() const;
  bool finite() const;
};

/// Fully-connected net: rectifier on hidden layers, linear output.
/// Batched calls treat each column as one sample. All math in doubles.
class DenseNet {
 public:
  DenseNet(std::vector<int> layer_sizes, std::mt19937_64& rng,
           InitMode mode = InitMode::FanInScaledNormal);

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& inputs) const;

  /// Activations recorded by a forward pass, consumed by backward().
  struct Tape {
    std::vector<Matrix> acts;  // acts[0] = input, acts[l] = post-activation of layer l
    Matrix output;
  };
  Matrix forward(const Matrix& inputs, Tape& tape) const;

  /// Reverse-mode pass. `out_grad` is dLoss/dOutput for each column.
  /// Parameter gradients are accumulated into `grads`; the return value is
  /// dLoss/dInput (useful for critics differentiated w.r.t. actions).
  Matrix backward(const Tape& tape, const Matrix& out_grad, Gradients& grads) const;

  Gradients zero_grads() const;

  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  size_t layer_count() const { return weights_.size(); }
  size_t parameter_count() const;

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  /// Smallest |pre-activation| over all hidden units for this input;
  /// gradient checks use it to stay away from rectifier kinks.
  double min_kink_distance(const Vector& input) const;

  nlohmann::json to_json() const;
  static DenseNet from_json(const nlohmann::json& j);

 private:
  DenseNet() = default;
  std::vector<int> layer_sizes_;
  std::vector<Matrix> weights_;  // weights_[l]: (out, in)
  std::vector<Vector> biases_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. A step with non-finite gradients is rejected:
/// parameters and the step counter stay untouched and the rejection is counted.
class Adam {
 public:
  Adam(const DenseNet& net, AdamConfig cfg);

  bool step(DenseNet& net, const Gradients& grads);

  long step_count() const { return step_count_; }
  long rejected_count() const { return rejected_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Gradients m_, v_;
  long step_count_ = 0;
  long rejected_count_ = 0;
};

struct UpdateReport {
  double grad_norm = 0.0;
  bool applied = false;
};

/// One optimizer step from explicit output gradients: forward `inputs`,
/// backpropagate `output_gradients`, apply Adam.
UpdateReport backward_update(DenseNet& net, const Matrix& inputs,
                             const Matrix& output_gradients, Adam& adam);

/// Compares reverse-mode parameter gradients of loss(net(input)) against
/// central finite differences (step `fd_step`). `loss_grad` must return
/// dLoss/dOutput. Returns the maximum elementwise error relative to
/// max(1, |analytic|, |numeric|).
double gradient_check(const DenseNet& net, const Vector& input,
                      const std::function<double(const Vector&)>& loss,
                      const std::function<Vector(const Vector&)>& loss_grad,
                      double fd_step = 1e-5);

}  // namespace evsched::nn

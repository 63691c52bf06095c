#include "evsched/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace evsched::nn {

void Gradients::set_zero() {
  for (auto& g : w) g.setZero();
  for (auto& g : b) g.setZero();
}

double Gradients::norm() const {
  double sq = 0.0;
  for (const auto& g : w) sq += g.squaredNorm();
  for (const auto& g : b) sq += g.squaredNorm();
  return std::sqrt(sq);
}

bool Gradients::finite() const {
  for (const auto& g : w)
    if (!g.allFinite()) return false;
  for (const auto& g : b)
    if (!g.allFinite()) return false;
  return true;
}

DenseNet::DenseNet(std::vector<int> layer_sizes, std::mt19937_64& rng, InitMode mode)
    : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2)
    throw std::invalid_argument("DenseNet: need at least input and output sizes");
  for (int s : layer_sizes_)
    if (s <= 0) throw std::invalid_argument("DenseNet: layer sizes must be positive");

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const int in = layer_sizes_[l];
    const int out = layer_sizes_[l + 1];
    const double scale =
        mode == InitMode::FanInScaledNormal ? 1.0 / std::sqrt(double(in)) : 1.0;
    Matrix w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = gauss(rng) * scale;
    Vector b(out);
    for (int r = 0; r < out; ++r) b(r) = gauss(rng) * scale;
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Vector DenseNet::forward(const Vector& input) const {
  return forward(Matrix(input)).col(0);
}

Matrix DenseNet::forward(const Matrix& inputs) const {
  Tape tape;
  return forward(inputs, tape);
}

Matrix DenseNet::forward(const Matrix& inputs, Tape& tape) const {
  if (inputs.rows() != input_size())
    throw std::invalid_argument("DenseNet::forward: input has " +
                                std::to_string(inputs.rows()) + " rows, expected " +
                                std::to_string(input_size()));
  tape.acts.clear();
  tape.acts.reserve(weights_.size());
  tape.acts.push_back(inputs);
  Matrix h = inputs;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = (weights_[l] * h).colwise() + biases_[l];
    if (l + 1 < weights_.size()) {
      h = z.cwiseMax(0.0);
      tape.acts.push_back(h);
    } else {
      h = std::move(z);
    }
  }
  tape.output = h;
  return h;
}

Matrix DenseNet::backward(const Tape& tape, const Matrix& out_grad,
                          Gradients& grads) const {
  if (grads.w.size() != weights_.size()) grads = zero_grads();
  Matrix delta = out_grad;  // dL/dz of the top (linear) layer
  for (size_t l = weights_.size(); l-- > 0;) {
    grads.w[l].noalias() += delta * tape.acts[l].transpose();
    grads.b[l] += delta.rowwise().sum();
    Matrix prev = weights_[l].transpose() * delta;
    if (l > 0) {
      // rectifier mask from the stored post-activation
      prev = prev.cwiseProduct(
          (tape.acts[l].array() > 0.0).cast<double>().matrix());
    }
    delta = std::move(prev);
  }
  return delta;
}

Gradients DenseNet::zero_grads() const {
  Gradients g;
  for (size_t l = 0; l < weights_.size(); ++l) {
    g.w.emplace_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.b.emplace_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

size_t DenseNet::parameter_count() const {
  size_t n = 0;
  for (size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<size_t>(weights_[l].size()) + biases_[l].size();
  return n;
}

double DenseNet::min_kink_distance(const Vector& input) const {
  double best = std::numeric_limits<double>::infinity();
  Vector h = input;
  for (size_t l = 0; l + 1 < weights_.size(); ++l) {
    Vector z = weights_[l] * h + biases_[l];
    best = std::min(best, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return best;
}

nlohmann::json DenseNet::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layers"] = layer_sizes_;
  nlohmann::json jw = nlohmann::json::array();
  nlohmann::json jb = nlohmann::json::array();
  for (size_t l = 0; l < weights_.size(); ++l) {
    std::vector<double> flat(weights_[l].size());
    Eigen::Map<Matrix>(flat.data(), weights_[l].rows(), weights_[l].cols()) =
        weights_[l];
    jw.push_back(flat);
    jb.push_back(std::vector<double>(biases_[l].data(),
                                     biases_[l].data() + biases_[l].size()));
  }
  j["weights"] = std::move(jw);
  j["biases"] = std::move(jb);
  return j;
}

DenseNet DenseNet::from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("DenseNet: unsupported checkpoint format_version");
  DenseNet net;
  net.layer_sizes_ = j.at("layers").get<std::vector<int>>();
  if (net.layer_sizes_.size() < 2)
    throw std::runtime_error("DenseNet: bad layer list in checkpoint");
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  for (size_t l = 0; l + 1 < net.layer_sizes_.size(); ++l) {
    const int in = net.layer_sizes_[l];
    const int out = net.layer_sizes_[l + 1];
    auto flat = jw.at(l).get<std::vector<double>>();
    if (flat.size() != static_cast<size_t>(in) * out)
      throw std::runtime_error("DenseNet: weight size mismatch in checkpoint");
    Matrix w = Eigen::Map<Matrix>(flat.data(), out, in);
    auto bv = jb.at(l).get<std::vector<double>>();
    if (bv.size() != static_cast<size_t>(out))
      throw std::runtime_error("DenseNet: bias size mismatch in checkpoint");
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(Eigen::Map<Vector>(bv.data(), out));
  }
  return net;
}

Adam::Adam(const DenseNet& net, AdamConfig cfg) : cfg_(cfg) {
  m_ = net.zero_grads();
  v_ = net.zero_grads();
}

bool Adam::step(DenseNet& net, const Gradients& grads) {
  if (!grads.finite()) {
    ++rejected_count_;
    return false;
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_count_));
  for (size_t l = 0; l < net.layer_count(); ++l) {
    m_.w[l] = cfg_.beta1 * m_.w[l] + (1.0 - cfg_.beta1) * grads.w[l];
    v_.w[l] = cfg_.beta2 * v_.w[l] +
              (1.0 - cfg_.beta2) * grads.w[l].cwiseProduct(grads.w[l]);
    net.weights()[l].array() -=
        cfg_.lr * (m_.w[l].array() / bc1) /
        ((v_.w[l].array() / bc2).sqrt() + cfg_.eps);

    m_.b[l] = cfg_.beta1 * m_.b[l] + (1.0 - cfg_.beta1) * grads.b[l];
    v_.b[l] = cfg_.beta2 * v_.b[l] + (1.0 - cfg_.beta2) * grads.b[l].cwiseProduct(grads.b[l]);
    net.biases()[l].array() -=
        cfg_.lr * (m_.b[l].array() / bc1) /
        ((v_.b[l].array() / bc2).sqrt() + cfg_.eps);
  }
  return true;
}

UpdateReport backward_update(DenseNet& net, const Matrix& inputs,
                             const Matrix& output_gradients, Adam& adam) {
  DenseNet::Tape tape;
  net.forward(inputs, tape);
  Gradients grads = net.zero_grads();
  net.backward(tape, output_gradients, grads);
  UpdateReport rep;
  rep.grad_norm = grads.norm();
  rep.applied = adam.step(net, grads);
  return rep;
}

double gradient_check(const DenseNet& net, const Vector& input,
                      const std::function<double(const Vector&)>& loss,
                      const std::function<Vector(const Vector&)>& loss_grad,
                      double fd_step) {
  DenseNet work = net;  // perturbed copy for finite differences

  DenseNet::Tape tape;
  work.forward(Matrix(input), tape);
  Gradients analytic = work.zero_grads();
  Matrix og = loss_grad(tape.output.col(0));
  work.backward(tape, og, analytic);

  auto eval = [&]() { return loss(work.forward(input)); };
  double max_err = 0.0;
  auto probe = [&](double& param, double analytic_g) {
    const double saved = param;
    param = saved + fd_step;
    const double up = eval();
    param = saved - fd_step;
    const double down = eval();
    param = saved;
    const double numeric = (up - down) / (2.0 * fd_step);
    const double denom = std::max({1.0, std::abs(analytic_g), std::abs(numeric)});
    max_err = std::max(max_err, std::abs(analytic_g - numeric) / denom);
  };

  for (size_t l = 0; l < work.layer_count(); ++l) {
    auto& w = work.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i)
      probe(w.data()[i], analytic.w[l].data()[i]);
    auto& b = work.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i)
      probe(b.data()[i], analytic.b[l].data()[i]);
  }
  return max_err;
}

}  // namespace evsched::nn

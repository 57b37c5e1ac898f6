#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdp/autodiff.hpp"
#include "hdp/rng.hpp"

namespace hdp {

enum class Activation { kRelu, kTanh };

inline std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}
inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + s);
}

struct PolicyNetworkConfig {
  std::vector<int> hidden = {64, 64};
  // the critic must resolve the piecewise value structure the quantizer
  // induces over latent space, which takes more width than the policies
  std::vector<int> critic_hidden = {128, 128};
  int time_embed_dim = 16;
  Activation activation = Activation::kRelu;

  void validate() const {
    if (hidden.empty() || critic_hidden.empty())
      throw std::invalid_argument("hidden widths must be nonempty");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("hidden width must be >= 1");
    for (int h : critic_hidden)
      if (h < 1) throw std::invalid_argument("hidden width must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
      throw std::invalid_argument("time_embed_dim must be a positive even number");
  }
};

// Plain MLP: linear layers with an activation between them, linear output.
struct Mlp {
  std::vector<ad::Param> weights;
  std::vector<ad::Param> biases;
  Activation activation = Activation::kRelu;
  int in_dim = 0;
  int out_dim = 0;

  Mlp() = default;

  Mlp(int in, const std::vector<int>& hidden, int out, Activation act, Rng& rng)
      : activation(act), in_dim(in), out_dim(out) {
    std::vector<int> dims;
    dims.push_back(in);
    for (int h : hidden) dims.push_back(h);
    dims.push_back(out);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
      double s = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      weights.emplace_back(rng.rand_uniform_mat(dims[l + 1], dims[l], -s, s));
      biases.emplace_back(ad::Mat::Zero(dims[l + 1], 1));
    }
  }

  size_t num_layers() const { return weights.size(); }

  long num_params() const {
    long n = 0;
    for (const auto& w : weights) n += w.value.size();
    for (const auto& b : biases) n += b.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& w : weights) w.zero_grad();
    for (auto& b : biases) b.zero_grad();
  }

  bool grads_are_zero(double tol = 0.0) const {
    for (const auto& w : weights)
      if (w.grad.cwiseAbs().maxCoeff() > tol) return false;
    for (const auto& b : biases)
      if (b.grad.cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }

  ad::Var forward(ad::Tape& tape, ad::Var x, bool train_params = true) {
    ad::Var h = x;
    for (size_t l = 0; l < weights.size(); ++l) {
      h = tape.linear(h, weights[l], biases[l], train_params);
      if (l + 1 < weights.size())
        h = activation == Activation::kRelu ? tape.relu(h) : tape.tanh_(h);
    }
    return h;
  }

  // tape-free forward for rollouts and target computations
  ad::Mat forward_raw(const ad::Mat& x) const {
    ad::Mat h = x;
    for (size_t l = 0; l < weights.size(); ++l) {
      h = (h * weights[l].value.transpose()).rowwise() +
          biases[l].value.col(0).transpose();
      if (l + 1 < weights.size()) {
        if (activation == Activation::kRelu)
          h = h.cwiseMax(0.0);
        else
          h = h.array().tanh();
      }
    }
    return h;
  }
};

// Sinusoidal embedding of the diffusion step index.
inline Eigen::RowVectorXd time_embedding(int step, int dim) {
  Eigen::RowVectorXd e(dim);
  int half = dim / 2;
  for (int j = 0; j < half; ++j) {
    double freq = std::pow(10000.0, -static_cast<double>(j) / half);
    e(2 * j) = std::sin(step * freq);
    e(2 * j + 1) = std::cos(step * freq);
  }
  return e;
}

inline ad::Mat time_embedding_rows(const std::vector<int>& steps, int dim) {
  ad::Mat m(static_cast<int>(steps.size()), dim);
  for (size_t b = 0; b < steps.size(); ++b) m.row(b) = time_embedding(steps[b], dim);
  return m;
}

// Polyak averaging: dst <- tau * src + (1 - tau) * dst. The incremental
// form is exactly a no-op when src == dst (bit-stable target maintenance).
inline void polyak(ad::Param& dst, const ad::Param& src, double tau) {
  dst.value += tau * (src.value - dst.value);
}

inline void polyak(Mlp& dst, const Mlp& src, double tau) {
  for (size_t l = 0; l < src.weights.size(); ++l) {
    polyak(dst.weights[l], src.weights[l], tau);
    polyak(dst.biases[l], src.biases[l], tau);
  }
}

}  // namespace hdp

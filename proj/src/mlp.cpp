#include "sentirag/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "sentirag/error.hpp"

namespace sentirag {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (auto s : sizes_)
    if (s == 0) throw ConfigError("MLP layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) num_params_ += sizes_[l + 1] * (sizes_[l] + 1);
}

std::vector<double> Mlp::init_params(Rng& rng, double output_scale) const {
  std::vector<double> p(num_params_, 0.0);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    std::size_t in = sizes_[l], out = sizes_[l + 1];
    double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    if (l + 2 == sizes_.size()) limit *= output_scale;
    for (std::size_t i = 0; i < in * out; ++i) p[off + i] = rng.uniform(-limit, limit);
    off += in * out + out;
  }
  return p;
}

std::vector<double> Mlp::forward(std::span<const double> params, std::span<const double> x,
                                 Cache* cache) const {
  if (x.size() != sizes_.front()) throw InputError("MLP input has the wrong dimension");
  if (params.size() != num_params_) throw InputError("MLP parameter vector has the wrong size");
  std::vector<double> act(x.begin(), x.end());
  if (cache) {
    cache->layers.clear();
    cache->layers.push_back(act);
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params.data() + off;
    const double* b = w + in * out;
    std::vector<double> next(out);
    bool hidden = l + 2 < sizes_.size();
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * act[i];
      next[o] = hidden ? std::tanh(z) : z;
    }
    act = std::move(next);
    if (cache) cache->layers.push_back(act);
    off += in * out + out;
  }
  return act;
}

void Mlp::backward(std::span<const double> params, const Cache& cache,
                   std::span<const double> dout, std::span<double> grad) const {
  if (cache.layers.size() != sizes_.size()) throw InputError("MLP cache does not match network");
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets.push_back(off);
    off += sizes_[l + 1] * (sizes_[l] + 1);
  }
  std::vector<double> delta(dout.begin(), dout.end());  // dL/dz of the current layer
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    std::size_t in = sizes_[l], out = sizes_[l + 1];
    const auto& a_in = cache.layers[l];
    const double* w = params.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * a_in[i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    // Layer l's output went through tanh: d tanh = 1 - a^2.
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a_in[i] * a_in[i];
    delta = std::move(prev);
  }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& x : out) {
    // Floor keeps every entry strictly positive.
    x = std::exp(std::max(x - mx, -700.0));
    sum += x;
  }
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace sentirag

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sentirag/rng.hpp"

namespace sentirag {

// Fully connected network with tanh hidden layers and a linear output.
// The object holds only the architecture; parameters live in a caller-owned
// flat vector laid out per layer as [W (out x in, row-major), b (out)].
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_params() const { return num_params_; }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  // Uniform Glorot init; the output layer is additionally scaled by
  // `output_scale`. Biases start at zero.
  std::vector<double> init_params(Rng& rng, double output_scale = 1.0) const;

  // Post-activation values of every layer, input first.
  struct Cache {
    std::vector<std::vector<double>> layers;
  };

  std::vector<double> forward(std::span<const double> params, std::span<const double> x,
                              Cache* cache = nullptr) const;

  // Adds dL/dparams to `grad` given dL/doutput at the cached forward pass.
  void backward(std::span<const double> params, const Cache& cache,
                std::span<const double> dout, std::span<double> grad) const;

 private:
  std::vector<std::size_t> sizes_;
  std::size_t num_params_ = 0;
};

// Adam optimizer over a flat parameter vector (descent on the given gradient).
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

std::vector<double> softmax(std::span<const double> logits);

}  // namespace sentirag

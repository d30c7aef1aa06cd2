/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Seeded synthetic models and token dumps. Values come straight from
// std::mt19937 bits so every platform produces identical weights.

#ifndef TOFU_RANDOM_HPP_
#define TOFU_RANDOM_HPP_

#include <cstdint>
#include <random>

#include "tofu/vit.hpp"

namespace tofu {

class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed)
      : engine_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}

  /// Uniform on [-1, 1) with 24 random bits.
  double symmetric() {
    const std::uint32_t bits = static_cast<std::uint32_t>(engine_()) >> 8;
    return static_cast<double>(bits) * (2.0 / 16777216.0) - 1.0;
  }

  template <typename Derived>
  void fill(Eigen::DenseBase<Derived>& m, double bound) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        m(i, j) = static_cast<typename Derived::Scalar>(bound * symmetric());
      }
    }
  }

 private:
  std::mt19937 engine_;
};

/// Every weight and bias uniform on +-1/sqrt(C); layernorms start at the
/// identity affine. Tensors are drawn in canonical file order.
template <typename Scalar = float>
VitModel<Scalar> random_model(const VitConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  UniformSource rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.channels));
  VitModel<Scalar> model;
  model.config = cfg;
  for (Index l = 0; l < cfg.depth; ++l) {
    auto w = BlockWeights<Scalar>::zeros(cfg);
    rng.fill(w.qkv_weight, bound);
    rng.fill(w.qkv_bias, bound);
    rng.fill(w.proj_weight, bound);
    rng.fill(w.proj_bias, bound);
    rng.fill(w.fc1_weight, bound);
    rng.fill(w.fc1_bias, bound);
    rng.fill(w.fc2_weight, bound);
    rng.fill(w.fc2_bias, bound);
    model.blocks.push_back(std::move(w));
  }
  if (cfg.num_classes > 0) {
    HeadWeights<Scalar> head;
    head.norm_gamma = Vector<Scalar>::Ones(cfg.channels);
    head.norm_beta = Vector<Scalar>::Zero(cfg.channels);
    head.weight = RowMatrix<Scalar>(cfg.channels, cfg.num_classes);
    head.bias = Vector<Scalar>(cfg.num_classes);
    rng.fill(head.weight, bound);
    rng.fill(head.bias, bound);
    model.head = std::move(head);
  }
  return model;
}

/// Replaces every MLP by an exact identity on its (normalized) input:
/// fc1 = [I | 0] shifted by +20 so GELU is linear there, fc2 = [I ; 0]
/// shifted back.
template <typename Scalar>
void make_identity_mlps(VitModel<Scalar>& model) {
  const Index c = model.config.channels, h = model.config.hidden();
  constexpr Scalar kShift = 20;
  for (auto& w : model.blocks) {
    w.fc1_weight = RowMatrix<Scalar>::Zero(c, h);
    w.fc1_weight.leftCols(c).setIdentity();
    w.fc1_bias = Vector<Scalar>::Zero(h);
    w.fc1_bias.head(c).setConstant(kShift);
    w.fc2_weight = RowMatrix<Scalar>::Zero(h, c);
    w.fc2_weight.topRows(c).setIdentity();
    w.fc2_bias = Vector<Scalar>::Constant(c, -kShift);
  }
}

template <typename Scalar = float>
TokenTensor<Scalar> random_tokens(Index batch, Index tokens, Index channels,
                                  std::uint64_t seed) {
  UniformSource rng(seed);
  TokenTensor<Scalar> out(batch, tokens, channels);
  for (Scalar& v : out.data()) v = static_cast<Scalar>(rng.symmetric());
  return out;
}

}  // namespace tofu

#endif  // TOFU_RANDOM_HPP_

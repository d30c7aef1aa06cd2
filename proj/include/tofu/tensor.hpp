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

// Dense substrate shared by every other module: a batched token tensor over
// contiguous row-major storage plus the handful of neural primitives a ViT
// block needs. Element type is a template parameter; reductions (means,
// variances, norms, softmax normalizers) always accumulate in double.

#ifndef TOFU_TENSOR_HPP_
#define TOFU_TENSOR_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tofu/errors.hpp"

namespace tofu {

using Eigen::Index;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixf = RowMatrix<float>;
using RowMatrixd = RowMatrix<double>;

inline std::string shape_string(Index rows, Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

/// Batch x tokens x channels, stored contiguously in row-major order so that
/// every batch item is an (N x C) row-major block.
template <typename Scalar>
class TokenTensor {
 public:
  using ItemMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstItemMap = Eigen::Map<const RowMatrix<Scalar>>;

  TokenTensor() = default;

  TokenTensor(Index batch, Index tokens, Index channels)
      : batch_(batch), tokens_(tokens), channels_(channels) {
    if (batch < 0 || tokens < 0 || channels < 0) {
      throw DimensionError("negative tensor extent");
    }
    data_.assign(static_cast<std::size_t>(batch * tokens * channels),
                 Scalar(0));
  }

  TokenTensor(Index batch, Index tokens, Index channels,
              std::vector<Scalar> data)
      : batch_(batch),
        tokens_(tokens),
        channels_(channels),
        data_(std::move(data)) {
    if (batch < 0 || tokens < 0 || channels < 0 ||
        data_.size() != static_cast<std::size_t>(batch * tokens * channels)) {
      throw DimensionError("token tensor payload of " +
                           std::to_string(data_.size()) +
                           " values does not match shape (" +
                           std::to_string(batch) + "x" +
                           std::to_string(tokens) + "x" +
                           std::to_string(channels) + ")");
    }
  }

  /// Single-item tensor from an (N x C) matrix expression.
  template <typename Derived>
  static TokenTensor from_item(const Eigen::MatrixBase<Derived>& item) {
    TokenTensor out(1, item.rows(), item.cols());
    out.item(0) = item.template cast<Scalar>();
    return out;
  }

  /// Stack equally shaped (N x C) items along the batch axis.
  static TokenTensor stack(const std::vector<RowMatrix<Scalar>>& items) {
    if (items.empty()) return TokenTensor();
    TokenTensor out(static_cast<Index>(items.size()), items[0].rows(),
                    items[0].cols());
    for (std::size_t b = 0; b < items.size(); ++b) {
      if (items[b].rows() != out.tokens_ || items[b].cols() != out.channels_) {
        throw DimensionError(
            "cannot stack item " +
            shape_string(items[b].rows(), items[b].cols()) + " onto " +
            shape_string(out.tokens_, out.channels_));
      }
      out.item(static_cast<Index>(b)) = items[b];
    }
    return out;
  }

  Index batch() const { return batch_; }
  Index tokens() const { return tokens_; }
  Index channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  std::span<const Scalar> data() const { return data_; }
  std::span<Scalar> data() { return data_; }

  ItemMap item(Index b) {
    return ItemMap(data_.data() + offset(b), tokens_, channels_);
  }
  ConstItemMap item(Index b) const {
    return ConstItemMap(data_.data() + offset(b), tokens_, channels_);
  }

  Scalar& operator()(Index b, Index n, Index c) {
    return data_[static_cast<std::size_t>((b * tokens_ + n) * channels_ + c)];
  }
  Scalar operator()(Index b, Index n, Index c) const {
    return data_[static_cast<std::size_t>((b * tokens_ + n) * channels_ + c)];
  }

  template <typename Other>
  TokenTensor<Other> cast() const {
    std::vector<Other> converted(data_.begin(), data_.end());
    return TokenTensor<Other>(batch_, tokens_, channels_,
                              std::move(converted));
  }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const TokenTensor& a, const TokenTensor& b) {
    return a.batch_ == b.batch_ && a.tokens_ == b.tokens_ &&
           a.channels_ == b.channels_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(Index b) const {
    if (b < 0 || b >= batch_) {
      throw InvalidInput("batch index " + std::to_string(b) +
                         " out of range for batch of " +
                         std::to_string(batch_));
    }
    return static_cast<std::size_t>(b * tokens_ * channels_);
  }

  Index batch_ = 0;
  Index tokens_ = 0;
  Index channels_ = 0;
  std::vector<Scalar> data_;
};

using TokenTensorf = TokenTensor<float>;

/// Checked matrix product; shape errors name both operands.
template <typename DerivedA, typename DerivedB>
RowMatrix<typename DerivedA::Scalar> matmul(
    const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " +
                         shape_string(a.rows(), a.cols()) + " x " +
                         shape_string(b.rows(), b.cols()));
  }
  RowMatrix<typename DerivedA::Scalar> out(a.rows(), b.cols());
  out.noalias() = a * b;
  return out;
}

/// x * w + bias for a row-major (tokens x in) activation and (in x out) weight.
template <typename DerivedX, typename DerivedW, typename DerivedB>
RowMatrix<typename DerivedX::Scalar> linear(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedW>& w,
    const Eigen::MatrixBase<DerivedB>& bias) {
  RowMatrix<typename DerivedX::Scalar> out = matmul(x, w);
  if (bias.size() != out.cols()) {
    throw DimensionError("bias of length " + std::to_string(bias.size()) +
                         " for output " + shape_string(out.rows(), out.cols()));
  }
  out.rowwise() += bias.reshaped().transpose();
  return out;
}

/// Per-row normalization to zero mean and unit (population) variance, then
/// the affine map gamma * x + beta.
template <typename Derived, typename DerivedG, typename DerivedB>
RowMatrix<typename Derived::Scalar> layernorm_rows(
    const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<DerivedG>& gamma,
    const Eigen::MatrixBase<DerivedB>& beta, double eps = 1e-6) {
  using Scalar = typename Derived::Scalar;
  const Index channels = x.cols();
  if (gamma.size() != channels || beta.size() != channels) {
    throw DimensionError("layernorm affine of length " +
                         std::to_string(gamma.size()) + "/" +
                         std::to_string(beta.size()) + " for " +
                         std::to_string(channels) + " channels");
  }
  if (!(eps > 0.0)) throw InvalidInput("layernorm eps must be positive");
  RowMatrix<Scalar> out(x.rows(), channels);
  for (Index i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (Index c = 0; c < channels; ++c) mean += static_cast<double>(x(i, c));
    mean /= static_cast<double>(channels);
    double var = 0.0;
    for (Index c = 0; c < channels; ++c) {
      const double d = static_cast<double>(x(i, c)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(channels);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (Index c = 0; c < channels; ++c) {
      const double z = (static_cast<double>(x(i, c)) - mean) * inv;
      out(i, c) = static_cast<Scalar>(static_cast<double>(gamma(c)) * z +
                                      static_cast<double>(beta(c)));
    }
  }
  return out;
}

template <typename Scalar, typename DerivedG, typename DerivedB>
TokenTensor<Scalar> layernorm(const TokenTensor<Scalar>& x,
                              const Eigen::MatrixBase<DerivedG>& gamma,
                              const Eigen::MatrixBase<DerivedB>& beta,
                              double eps = 1e-6) {
  TokenTensor<Scalar> out(x.batch(), x.tokens(), x.channels());
  if (gamma.size() != x.channels() || beta.size() != x.channels()) {
    throw DimensionError("layernorm affine does not match " +
                         std::to_string(x.channels()) + " channels");
  }
  for (Index b = 0; b < x.batch(); ++b) {
    out.item(b) = layernorm_rows(x.item(b), gamma, beta, eps);
  }
  return out;
}

/// Row-wise softmax with max subtraction. Exponentials and the normalizer
/// are evaluated in double before rounding back to Scalar.
template <typename Derived>
RowMatrix<typename Derived::Scalar> softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  RowMatrix<Scalar> out(x.rows(), x.cols());
  std::vector<double> e(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    if (x.cols() == 0) continue;
    double max = static_cast<double>(x(i, 0));
    for (Index j = 1; j < x.cols(); ++j) {
      max = std::max(max, static_cast<double>(x(i, j)));
    }
    double sum = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      e[static_cast<std::size_t>(j)] =
          std::exp(static_cast<double>(x(i, j)) - max);
      sum += e[static_cast<std::size_t>(j)];
    }
    for (Index j = 0; j < x.cols(); ++j) {
      out(i, j) = static_cast<Scalar>(e[static_cast<std::size_t>(j)] / sum);
    }
  }
  return out;
}

/// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline double gelu_scalar(double x) {
  constexpr double kAlpha = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kAlpha * (x + 0.044715 * x * x * x)));
}

template <typename Derived>
RowMatrix<typename Derived::Scalar> gelu(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) {
    return static_cast<Scalar>(gelu_scalar(static_cast<double>(v)));
  });
}

template <typename Scalar>
TokenTensor<Scalar> gelu(const TokenTensor<Scalar>& x) {
  TokenTensor<Scalar> out(x.batch(), x.tokens(), x.channels());
  for (Index b = 0; b < x.batch(); ++b) out.item(b) = gelu(x.item(b));
  return out;
}

/// Euclidean norm of every row, accumulated in double.
template <typename Derived>
Eigen::VectorXd row_norms(const Eigen::MatrixBase<Derived>& x) {
  Eigen::VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Index c = 0; c < x.cols(); ++c) {
      const double v = static_cast<double>(x(i, c));
      s += v * v;
    }
    out(i) = std::sqrt(s);
  }
  return out;
}

/// (B x N) matrix of token norms.
template <typename Scalar>
RowMatrix<Scalar> row_norms(const TokenTensor<Scalar>& x) {
  RowMatrix<Scalar> out(x.batch(), x.tokens());
  for (Index b = 0; b < x.batch(); ++b) {
    out.row(b) = row_norms(x.item(b)).template cast<Scalar>().transpose();
  }
  return out;
}

}  // namespace tofu

#endif  // TOFU_TENSOR_HPP_

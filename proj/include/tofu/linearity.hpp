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
// Functional linearity: how close a map stays to a straight line while its
// input moves along X(t) = (1 - t) X1 + t X2. The score is the chord
// ||f(X1) - f(X2)|| over the length of the sampled output polyline, so it
// lies in [0, 1] and equals 1 for affine maps.

#ifndef TOFU_LINEARITY_HPP_
#define TOFU_LINEARITY_HPP_

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "tofu/matching.hpp"
#include "tofu/vit.hpp"

namespace tofu {

/// Neumaier summation; aggregates must not depend on evaluation order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::VectorXd interpolate(const Eigen::VectorXd& x1,
                                   const Eigen::VectorXd& x2, double t) {
  if (x1.size() != x2.size()) {
    throw DimensionError("interpolate: lengths " + std::to_string(x1.size()) +
                         " and " + std::to_string(x2.size()));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("interpolate: t outside [0, 1]");
  return (1.0 - t) * x1 + t * x2;
}

/// Sum of ||f(X(t_i)) - f(X(t_{i-1}))|| over t_i = i / (steps - 1).
inline double path_length(const VectorMap& f, const Eigen::VectorXd& x1,
                          const Eigen::VectorXd& x2, Index steps) {
  if (steps < 3) {
    throw InvalidInput("path_length needs at least 3 steps, got " +
                       std::to_string(steps));
  }
  Eigen::VectorXd prev = f(interpolate(x1, x2, 0.0));
  CompensatedSum total;
  for (Index i = 1; i < steps; ++i) {
    const double t = i == steps - 1 ? 1.0 : double(i) / double(steps - 1);
    Eigen::VectorXd cur = f(interpolate(x1, x2, t));
    if (cur.size() != prev.size()) {
      throw DimensionError("mapped vector changed length along the path");
    }
    total.add((cur - prev).norm());
    prev = std::move(cur);
  }
  return total.value();
}

/// Chord over path; nullopt when the path is shorter than 1e-12.
inline std::optional<double> functional_linearity(const VectorMap& f,
                                                  const Eigen::VectorXd& x1,
                                                  const Eigen::VectorXd& x2,
                                                  Index steps) {
  const double path = path_length(f, x1, x2, steps);
  if (path < 1e-12) return std::nullopt;
  return (f(x1) - f(x2)).norm() / path;
}

/// Which part of a block the profiler treats as f.
enum class FlSubmap {
  Mlp,      // the MLP, probed on its layernormed input
  NormMlp,  // MLP(LN2(.)), probed on the residual stream
};

struct FlConfig {
  Index steps = 21;
  Index bsm_r = 5;
  /// When non-empty, these (i, j) token pairs replace the BSM pairs.
  std::vector<std::pair<Index, Index>> pairs;
  FlSubmap submap = FlSubmap::Mlp;

  void validate() const {
    if (steps < 3) throw InvalidInput("FL needs at least 3 steps");
    if (bsm_r < 0) throw InvalidInput("negative pair count");
  }
};

struct FlLayer {
  Index layer = 0;
  double mean_fl = 0.0;
  double std_fl = 0.0;
  Index count = 0;      // pairs with a defined FL
  Index undefined = 0;  // coincident pairs, excluded from the aggregate

  friend bool operator==(const FlLayer&, const FlLayer&) = default;
};

struct FlReport {
  std::vector<FlLayer> layers;

  friend bool operator==(const FlReport&, const FlReport&) = default;
};

inline FlLayer aggregate_fl(Index layer, const std::vector<double>& values,
                            Index undefined) {
  FlLayer out;
  out.layer = layer;
  out.count = static_cast<Index>(values.size());
  out.undefined = undefined;
  if (values.empty()) return out;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  out.mean_fl = sum.value() / double(values.size());
  CompensatedSum sq;
  for (double v : values) sq.add((v - out.mean_fl) * (v - out.mean_fl));
  out.std_fl = std::sqrt(sq.value() / double(values.size()));
  return out;
}

/// Runs the unreduced stack and, at every layer, measures FL of the chosen
/// submap between token pairs (BSM matches on that layer's keys unless an
/// explicit pair list is given). Evaluation happens in double.
template <typename Scalar>
FlReport profile_model(const VitModel<Scalar>& model,
                       const TokenTensor<Scalar>& tokens, const FlConfig& cfg) {
  cfg.validate();
  if (model.blocks.empty()) throw InvalidInput("model has no layers");
  if (tokens.channels() != model.config.channels) {
    throw DimensionError("tokens do not match model channels");
  }
  const VitModel<double> md = model.template cast<double>();
  std::vector<RowMatrixd> items;
  for (Index b = 0; b < tokens.batch(); ++b) {
    items.push_back(tokens.item(b).template cast<double>());
  }
  FlReport report;
  for (std::size_t l = 0; l < md.blocks.size(); ++l) {
    const BlockWeights<double>& w = md.blocks[l];
    std::vector<double> values;
    Index undefined = 0;
    for (RowMatrixd& x : items) {
      const auto a = attention(layernorm_rows(x, w.norm1_gamma, w.norm1_beta),
                               w, md.config.heads);
      const RowMatrixd xs = x + a.out;
      const RowMatrixd normed = layernorm_rows(xs, w.norm2_gamma, w.norm2_beta);

      std::vector<std::pair<Index, Index>> pairs = cfg.pairs;
      if (pairs.empty() && xs.rows() >= 2) {
        const MatchResult m =
            bipartite_soft_match(a.keys, partition(xs.rows()), cfg.bsm_r);
        for (Index k = 0; k < m.r(); ++k) {
          pairs.emplace_back(m.idx_src[static_cast<std::size_t>(k)],
                             m.idx_dst[static_cast<std::size_t>(k)]);
        }
      }

      const RowMatrixd& probe = cfg.submap == FlSubmap::Mlp ? normed : xs;
      const VectorMap f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        RowMatrixd row = v.transpose();
        if (cfg.submap == FlSubmap::NormMlp) {
          row = layernorm_rows(row, w.norm2_gamma, w.norm2_beta);
        }
        return mlp(row, w).transpose();
      };
      for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= probe.rows() || j >= probe.rows()) {
          throw InvalidInput("FL pair (" + std::to_string(i) + ", " +
                             std::to_string(j) + ") outside " +
                             std::to_string(probe.rows()) + " tokens");
        }
        const auto fl = functional_linearity(f, probe.row(i).transpose(),
                                             probe.row(j).transpose(),
                                             cfg.steps);
        if (fl) {
          values.push_back(*fl);
        } else {
          ++undefined;
        }
      }
      x = xs + mlp(normed, w);
    }
    report.layers.push_back(
        aggregate_fl(static_cast<Index>(l), values, undefined));
  }
  return report;
}

}  // namespace tofu

#endif  // TOFU_LINEARITY_HPP_

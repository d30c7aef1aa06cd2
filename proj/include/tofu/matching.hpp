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
// Bipartite soft matching over an alternating SRC/DST split of the sequence.

#ifndef TOFU_MATCHING_HPP_
#define TOFU_MATCHING_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <numeric>
#include <vector>

#include "tofu/tensor.hpp"

namespace tofu {

/// Disjoint SRC/DST split; both lists hold global token indices, ascending.
struct Partition {
  std::vector<Index> src;
  std::vector<Index> dst;
  Index tokens() const { return static_cast<Index>(src.size() + dst.size()); }
};

/// The r selected (src, dst) edges, best first. `idx_src` is duplicate free,
/// `idx_dst` may repeat.
struct MatchResult {
  Partition partition;
  std::vector<Index> idx_src;
  std::vector<Index> idx_dst;
  std::vector<double> scores;
  Index requested_r = 0;
  bool clamped = false;  // requested_r exceeded |SRC|

  Index r() const { return static_cast<Index>(idx_src.size()); }
};

/// Even positions go to DST, odd positions to SRC. Position 0 (CLS when
/// present) therefore always lands in DST and can never be a merge source;
/// `protect_cls` only documents the caller's intent here.
inline Partition partition(Index n_tokens, bool protect_cls = true) {
  (void)protect_cls;
  if (n_tokens < 2) {
    throw InvalidInput("partition needs at least 2 tokens, got " +
                       std::to_string(n_tokens));
  }
  Partition p;
  p.dst.reserve(static_cast<std::size_t>((n_tokens + 1) / 2));
  p.src.reserve(static_cast<std::size_t>(n_tokens / 2));
  for (Index i = 0; i < n_tokens; ++i) (i % 2 == 0 ? p.dst : p.src).push_back(i);
  return p;
}

namespace detail {

/// Rows of `metric` widened to long double, with their squared norms.
template <typename Derived>
std::vector<std::vector<long double>> wide_rows(
    const Eigen::MatrixBase<Derived>& metric, const std::vector<Index>& rows,
    std::vector<long double>& sq_norm) {
  std::vector<std::vector<long double>> out;
  out.reserve(rows.size());
  sq_norm.assign(rows.size(), 0.0L);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    if (i < 0 || i >= metric.rows()) {
      throw InvalidInput("token index " + std::to_string(i) +
                         " outside metric with " +
                         std::to_string(metric.rows()) + " rows");
    }
    std::vector<long double> r(static_cast<std::size_t>(metric.cols()));
    for (Index c = 0; c < metric.cols(); ++c) {
      r[static_cast<std::size_t>(c)] = static_cast<long double>(metric(i, c));
      sq_norm[k] += r[static_cast<std::size_t>(c)] * r[static_cast<std::size_t>(c)];
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Cosine similarity between every SRC row and every DST row of `metric`
/// (|SRC| x |DST|). A zero-norm row scores -1 against every partner.
/// Accumulated in long double and rounded once, so parallel rows score
/// exactly 1 and equal inputs give equal scores.
template <typename Derived>
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixBase<Derived>& metric,
                                  const Partition& p) {
  std::vector<long double> src_sq, dst_sq;
  const auto a = detail::wide_rows(metric, p.src, src_sq);
  const auto b = detail::wide_rows(metric, p.dst, dst_sq);
  Eigen::MatrixXd sim(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      double v = -1.0;
      if (src_sq[i] > 0.0L && dst_sq[j] > 0.0L) {
        long double dot = 0.0L;
        for (std::size_t c = 0; c < a[i].size(); ++c) dot += a[i][c] * b[j][c];
        v = static_cast<double>(dot / std::sqrt(src_sq[i] * dst_sq[j]));
      }
      sim(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  }
  return sim;
}

/// Keeps each SRC token's best DST edge, then the r strongest of those.
/// Ties prefer the lower global SRC index, then the lower global DST index.
/// r larger than |SRC| is clamped and flagged.
template <typename Derived>
MatchResult bipartite_soft_match(const Eigen::MatrixBase<Derived>& metric,
                                 const Partition& p, Index r) {
  if (r < 0) throw InvalidInput("negative reduction count");
  MatchResult out;
  out.partition = p;
  out.requested_r = r;
  const auto n_src = static_cast<Index>(p.src.size());
  if (r > n_src) {
    out.clamped = true;
    r = n_src;
  }
  if (r == 0) return out;

  const Eigen::MatrixXd sim = similarity_matrix(metric, p);
  std::vector<Index> best_dst(static_cast<std::size_t>(n_src));
  std::vector<double> best_score(static_cast<std::size_t>(n_src));
  for (Index i = 0; i < n_src; ++i) {
    Index arg = 0;
    for (Index j = 1; j < sim.cols(); ++j) {
      if (sim(i, j) > sim(i, arg)) arg = j;
    }
    best_dst[static_cast<std::size_t>(i)] = arg;
    best_score[static_cast<std::size_t>(i)] = sim(i, arg);
  }

  // p.src is ascending, so local order breaks score ties by global index.
  std::vector<Index> order(static_cast<std::size_t>(n_src));
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + r, order.end(),
                    [&](Index a, Index b) {
                      const double sa = best_score[static_cast<std::size_t>(a)];
                      const double sb = best_score[static_cast<std::size_t>(b)];
                      return sa > sb || (sa == sb && a < b);
                    });
  for (Index k = 0; k < r; ++k) {
    const auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
    out.idx_src.push_back(p.src[i]);
    out.idx_dst.push_back(p.dst[static_cast<std::size_t>(best_dst[i])]);
    out.scores.push_back(best_score[i]);
  }
  return out;
}

}  // namespace tofu

#endif  // TOFU_MATCHING_HPP_

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
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tofu/tensor.hpp"

using namespace tofu;

namespace {

RowMatrixf mat(Index rows, Index cols, std::initializer_list<float> v) {
  RowMatrixf m(rows, cols);
  Index i = 0;
  for (float x : v) m.data()[i++] = x;
  return m;
}

}  // namespace

TEST_CASE("matmul small products") {
  RowMatrixf a = mat(2, 2, {1, 2, 3, 4});
  RowMatrixf id = RowMatrixf::Identity(2, 2);
  CHECK(matmul(a, id) == a);
  RowMatrixf expect = mat(2, 2, {7, 10, 15, 22});
  CHECK(matmul(a, a) == expect);

  RowMatrixf row = mat(1, 3, {1, 2, 3});
  RowMatrixf col = mat(3, 1, {4, 5, 6});
  CHECK(matmul(row, col)(0, 0) == 32.0f);
}

TEST_CASE("matmul reports both shapes on mismatch") {
  RowMatrixf a(2, 3), b(2, 3);
  try {
    (void)matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("(2x3)") != std::string::npos);
  }
}

TEST_CASE("matmul is associative within float rounding") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> dim(1, 12);
    const Index m = dim(rng), k = dim(rng), n = dim(rng), p = dim(rng);
    RowMatrixf a = oracle::random_matrix(rng, m, k);
    RowMatrixf b = oracle::random_matrix(rng, k, n);
    RowMatrixf c = oracle::random_matrix(rng, n, p);
    RowMatrixf lhs = matmul(matmul(a, b), c);
    RowMatrixf rhs = matmul(a, matmul(b, c));
    const double scale = std::max(1.0, double(lhs.cwiseAbs().maxCoeff()));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-4 * scale);
  }
}

TEST_CASE("linear adds the bias to every row") {
  RowMatrixf x = mat(2, 2, {1, 0, 0, 1});
  RowMatrixf w = mat(2, 3, {1, 2, 3, 4, 5, 6});
  Vector<float> b(3);
  b << 10, 20, 30;
  RowMatrixf y = linear(x, w, b);
  CHECK(y == mat(2, 3, {11, 22, 33, 14, 25, 36}));
  Vector<float> bad(2);
  CHECK_THROWS_AS(linear(x, w, bad), DimensionError);
}

TEST_CASE("layernorm examples") {
  Vector<float> g = Vector<float>::Ones(3), z = Vector<float>::Zero(3);
  RowMatrixf c = mat(1, 3, {4, 4, 4});
  CHECK(layernorm_rows(c, g, z).isZero(0));

  Vector<float> g2 = Vector<float>::Ones(2), z2 = Vector<float>::Zero(2);
  RowMatrixf two = mat(1, 2, {0, 2});
  RowMatrixf y = layernorm_rows(two, g2, z2, 1e-12);
  CHECK(y(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(y(0, 1) == doctest::Approx(1.0).epsilon(1e-6));

  Vector<float> g0 = Vector<float>::Zero(2), b5 = Vector<float>::Constant(2, 5);
  CHECK(layernorm_rows(two, g0, b5) == mat(1, 2, {5, 5}));
  CHECK_THROWS_AS(layernorm_rows(two, g, z), DimensionError);
}

TEST_CASE("layernorm rows have zero mean and unit variance") {
  std::mt19937 rng(11);
  RowMatrixf x = oracle::random_matrix(rng, 20, 17, -50.0f, 50.0f);
  Vector<float> g = Vector<float>::Ones(17), z = Vector<float>::Zero(17);
  RowMatrixd y = layernorm_rows(x, g, z).cast<double>();
  for (Index i = 0; i < y.rows(); ++i) {
    const double mean = y.row(i).mean();
    const double var = (y.row(i).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("softmax examples") {
  RowMatrixf x = mat(1, 2, {0, 0});
  RowMatrixf y = softmax_rows(x);
  CHECK(y(0, 0) == doctest::Approx(0.5));
  CHECK(y(0, 1) == doctest::Approx(0.5));

  RowMatrixf big = mat(1, 2, {1000, 1000});
  y = softmax_rows(big);
  CHECK(y.allFinite());
  CHECK(y(0, 0) == doctest::Approx(0.5));

  RowMatrixd l(1, 2);
  l << 0.0, std::log(3.0);
  RowMatrixd p = softmax_rows(l);
  CHECK(p(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one for large logits") {
  std::mt19937 rng(3);
  RowMatrixf x = oracle::random_matrix(rng, 32, 40, -1e4f, 1e4f);
  RowMatrixf y = softmax_rows(x);
  REQUIRE(y.allFinite());
  for (Index i = 0; i < y.rows(); ++i) {
    CHECK(std::abs(y.row(i).cast<double>().sum() - 1.0) < 1e-5);
    CHECK(y.row(i).minCoeff() >= 0.0f);
  }
}

TEST_CASE("gelu values") {
  CHECK(gelu_scalar(0.0) == 0.0);
  CHECK(std::abs(gelu_scalar(10.0) - 10.0) < 1e-4);
  CHECK(std::abs(gelu_scalar(1.0) - gelu_scalar(-1.0) - 1.0) < 1e-3);
  CHECK(std::abs(gelu_scalar(-10.0)) < 1e-4);

  RowMatrixd x(1, 3);
  x << -1.0, 0.0, 2.0;
  RowMatrixd y = gelu(x);
  for (Index j = 0; j < 3; ++j) {
    CHECK(y(0, j) == doctest::Approx(gelu_scalar(x(0, j))).epsilon(1e-14));
  }
}

TEST_CASE("row norms") {
  RowMatrixf x = mat(3, 2, {3, 4, 0, 0, 1, 0});
  Eigen::VectorXd n = row_norms(x);
  CHECK(n(0) == 5.0);
  CHECK(n(1) == 0.0);
  CHECK(n(2) == 1.0);
}

TEST_CASE("token tensor layout") {
  TokenTensorf t(2, 3, 4);
  CHECK(t.size() == 24);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = float(i);
  CHECK(t(1, 2, 3) == 23.0f);
  CHECK(t.item(1)(0, 0) == 12.0f);
  CHECK(t.all_finite());
  t(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(t.all_finite());

  CHECK_THROWS_AS(TokenTensorf(1, 2, 2, std::vector<float>(3)), DimensionError);

  RowMatrixf a = RowMatrixf::Ones(3, 2), b = RowMatrixf::Zero(3, 2);
  TokenTensorf s = TokenTensorf::stack({a, b});
  CHECK(s.batch() == 2);
  CHECK(s.item(0) == a);
  CHECK(s.item(1) == b);
  CHECK(TokenTensorf::from_item(a).batch() == 1);
  CHECK_THROWS_AS(TokenTensorf::stack({a, RowMatrixf::Zero(2, 2)}), DimensionError);
}

TEST_CASE("token tensor layernorm and gelu act per item") {
  std::mt19937 rng(5);
  RowMatrixf a = oracle::random_matrix(rng, 4, 6), b = oracle::random_matrix(rng, 4, 6);
  TokenTensorf t = TokenTensorf::stack({a, b});
  Vector<float> g = Vector<float>::Ones(6), z = Vector<float>::Zero(6);
  TokenTensorf n = layernorm(t, g, z);
  CHECK(n.item(1) == layernorm_rows(b, g, z));
  CHECK(gelu(t).item(0) == gelu(a));
  RowMatrixf norms = row_norms(t);
  CHECK(norms.rows() == 2);
  CHECK(norms.cols() == 4);
}

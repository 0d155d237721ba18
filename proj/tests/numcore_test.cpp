// Copyright 2026 The rumorgraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "rumorgraph/numcore/optim.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/numcore/tensor.hpp"
#include "support.hpp"

namespace rumorgraph {
namespace {

using testing::gradcheck;
using testing::random_tensor;
using T2 = Tensor<double>;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const T2 m = T2::from_rows({{1.5, -2.0, 3.0}, {0.25, 4.0, -1.0}});
  EXPECT_EQ(linalg::matmul(T2::identity(2), m), m);
}

TEST(Matmul, HandExample) {
  const T2 a = T2::from_rows({{1, 2}, {3, 4}});
  const T2 b = T2::from_rows({{0}, {1}});
  EXPECT_EQ(linalg::matmul(a, b), T2::from_rows({{2}, {4}}));
}

TEST(Matmul, ZerosTimesOnes) {
  EXPECT_EQ(linalg::matmul(T2(3, 4), T2(4, 2, 1.0)), T2(3, 2));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    linalg::matmul(T2(2, 3), T2(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, TransposedVariantsAgree) {
  RandomStream rng(3);
  const T2 a = random_tensor(4, 3, rng), b = random_tensor(4, 5, rng), c = random_tensor(6, 3, rng);
  const T2 tn = linalg::matmul_tn(a, b), ref_tn = linalg::matmul(linalg::transpose(a), b);
  const T2 nt = linalg::matmul_nt(a, c), ref_nt = linalg::matmul(a, linalg::transpose(c));
  for (std::size_t i = 0; i < tn.size(); ++i) EXPECT_NEAR(tn[i], ref_tn[i], 1e-14);
  for (std::size_t i = 0; i < nt.size(); ++i) EXPECT_NEAR(nt[i], ref_nt[i], 1e-14);
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(T2(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  const T2 y = linalg::layer_norm(T2::from_rows({{1, 1, 1}}), T2(1, 3, 1.0), T2(1, 3), 1e-5);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoValueRow) {
  const T2 y = linalg::layer_norm(T2::from_rows({{0, 2}}), T2(1, 2, 1.0), T2(1, 2), 1e-5);
  EXPECT_NEAR(y[0], -1.0, 1e-5);
  EXPECT_NEAR(y[1], 1.0, 1e-5);
}

TEST(LayerNorm, ZeroGainYieldsBias) {
  RandomStream rng(5);
  const T2 bias = random_tensor(1, 4, rng);
  const T2 y = linalg::layer_norm(random_tensor(3, 4, rng), T2(1, 4), bias, 1e-5);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(y(r, c), bias[c]);
}

TEST(LayerNorm, RowsAreStandardized) {
  RandomStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(6), d = 2 + rng.below(30);
    const T2 y = linalg::layer_norm(random_tensor(n, d, rng, -5, 5), T2(1, d, 1.0), T2(1, d), 1e-5);
    for (std::size_t r = 0; r < n; ++r) {
      double mean = 0, var = 0;
      for (double v : y.row(r)) mean += v;
      mean /= static_cast<double>(d);
      for (double v : y.row(r)) var += (v - mean) * (v - mean);
      var /= static_cast<double>(d);
      EXPECT_LT(std::abs(mean), 1e-9);
      EXPECT_NEAR(var, 1.0, 1e-4);  // eps in the denominator shrinks the variance slightly
    }
  }
}

TEST(LayerNorm, VarianceWithinOneMillionthForWellScaledRows) {
  RandomStream rng(12);
  const T2 y = linalg::layer_norm(random_tensor(4, 16, rng, -10, 10), T2(1, 16, 1.0), T2(1, 16), 1e-5);
  for (std::size_t r = 0; r < 4; ++r) {
    double var = 0;
    for (double v : y.row(r)) var += v * v;
    EXPECT_NEAR(var / 16.0, 1.0, 1e-6);
  }
}

TEST(AdamW, ZeroLearningRateIsIdentity) {
  RandomStream rng(1);
  T2 p = random_tensor(3, 3, rng);
  const T2 before = p;
  AdamW<double> opt(AdamWConfig{0.0, 0.9, 0.999, 1e-8, 0.0});
  std::vector<T2*> ps{&p};
  std::vector<T2> gs{random_tensor(3, 3, rng)};
  for (int i = 0; i < 5; ++i) opt.step(ps, gs);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  T2 p(1, 1, 2.0);
  AdamW<double> opt(AdamWConfig{0.01, 0.9, 0.999, 1e-8, 0.0});
  std::vector<T2*> ps{&p};
  std::vector<T2> gs{T2(1, 1, 1.0)};
  opt.step(ps, gs);
  // m_hat = v_hat = 1 after bias correction.
  EXPECT_NEAR(p[0], 2.0 - 0.01 / (1.0 + 1e-8), 1e-15);
}

TEST(AdamW, DecayOnlyStepWithZeroGradient) {
  T2 p(1, 2, 3.0);
  AdamW<double> opt(AdamWConfig{0.01, 0.9, 0.999, 1e-8, 0.1});
  std::vector<T2*> ps{&p};
  std::vector<T2> gs{T2(1, 2)};
  opt.step(ps, gs);
  EXPECT_DOUBLE_EQ(p[0], 3.0 - 0.001 * 3.0);
  EXPECT_DOUBLE_EQ(p[1], 3.0 - 0.001 * 3.0);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  T2 p(1, 1);
  AdamW<double> opt;
  std::vector<T2*> ps{&p};
  std::vector<T2> gs{T2(1, 1, std::nan(""))};
  std::vector<std::string> names{"W1"};
  try {
    opt.step(ps, gs, names);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("W1"), std::string::npos);
  }
}

TEST(Glorot, ValuesWithinBound) {
  RngStreams streams(9);
  const T2 w = glorot_uniform<double>(30, 20, streams[Stream::kInit]);
  const double bound = std::sqrt(6.0 / 50.0);
  for (double v : w.values()) {
    EXPECT_GE(v, -bound);
    EXPECT_LT(v, bound);
  }
}

TEST(Glorot, SameSeedSameTensor) {
  RngStreams a(42), b(42);
  EXPECT_EQ(glorot_uniform<double>(8, 8, a[Stream::kInit]),
            glorot_uniform<double>(8, 8, b[Stream::kInit]));
}

TEST(Glorot, EmpiricalMeanNearZero) {
  RngStreams streams(77);
  const T2 w = glorot_uniform<double>(400, 250, streams[Stream::kInit]);  // 10^5 draws
  double mean = 0;
  for (double v : w.values()) mean += v;
  mean /= static_cast<double>(w.size());
  const double bound = std::sqrt(6.0 / 650.0);
  const double sigma = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(w.size()));
  EXPECT_LT(std::abs(mean), 3 * sigma);
}

TEST(FiniteDiff, SquareAtThree) {
  T2 p(1, 1, 3.0);
  std::vector<T2*> ps{&p};
  const auto g = finite_diff_grad<double>([&] { return p[0] * p[0]; }, ps, 1e-5);
  EXPECT_NEAR(g[0][0], 6.0, 1e-8);
}

TEST(FiniteDiff, ConstantLossHasZeroGradient) {
  RandomStream rng(2);
  T2 p = random_tensor(2, 3, rng);
  std::vector<T2*> ps{&p};
  const auto g = finite_diff_grad<double>([] { return 4.2; }, ps, 1e-5);
  for (double v : g[0].values()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, SumHasUnitGradient) {
  RandomStream rng(3);
  T2 p = random_tensor(3, 2, rng);
  std::vector<T2*> ps{&p};
  const auto g = finite_diff_grad<double>(
      [&] {
        double s = 0;
        for (double v : p.values()) s += v;
        return s;
      },
      ps, 1e-5);
  for (double v : g[0].values()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Rng, SubstreamsAreIndependentOfEachOther) {
  RngStreams a(5), b(5);
  for (int i = 0; i < 100; ++i) b[Stream::kDropout].next_u64();
  EXPECT_EQ(a[Stream::kShuffle].next_u64(), b[Stream::kShuffle].next_u64());
}

TEST(Rng, PinnedFirstDraws) {
  // splitmix64 and mt19937_64 outputs are fixed by their definitions.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  std::mt19937_64 ref(splitmix64(5 ^ fnv1a64("init")));
  RngStreams s(5);
  EXPECT_EQ(s[Stream::kInit].next_u64(), ref());
}

TEST(Rng, UniformAndBelowStayInRange) {
  RandomStream r(8);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Rng, SerializeRoundTrip) {
  RngStreams a(13);
  a[Stream::kDropout].next_u64();
  RngStreams b(0);
  b.deserialize(a.serialize());
  EXPECT_EQ(a[Stream::kDropout].next_u64(), b[Stream::kDropout].next_u64());
}

// --- tape gradients ----------------------------------------------------------

class PrimitiveGradients : public ::testing::Test {
 protected:
  RandomStream rng{2024};
  std::size_t dim() { return 1 + rng.below(8); }
  T2 rand(std::size_t r, std::size_t c) { return random_tensor(r, c, rng); }
  // Weighted sum so every output coordinate has a distinct sensitivity.
  static Var<double> reduce(Var<double> y, const T2& w) { return ops::sum(ops::mask(y, w)); }
};

TEST_F(PrimitiveGradients, RandomShapesMatchFiniteDifferences) {
  constexpr double kTol = 1e-4;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = dim(), k = dim(), n = dim();
    const T2 wmk = rand(m, k), wmn = rand(m, n), wkm = rand(k, m);
    const std::size_t op = static_cast<std::size_t>(trial) % 12;
    double err = 0;
    switch (op) {
      case 0:
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::matmul(v[0], v[1]), wmn); },
                        {rand(m, k), rand(k, n)});
        break;
      case 1:
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::transpose(v[0]), wkm); },
                        {rand(m, k)});
        break;
      case 2:
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::add(v[0], v[1]), wmk); },
                        {rand(m, k), rand(m, k)});
        break;
      case 3:
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::scale(v[0], -1.7), wmk); },
                        {rand(m, k)});
        break;
      case 4:
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::add_row(v[0], v[1]), wmk); },
                        {rand(m, k), rand(1, k)});
        break;
      case 5: {
        // Keep inputs away from the kink so central differences are valid.
        T2 x = rand(m, k);
        for (auto& v : x.values()) v += v >= 0 ? 0.1 : -0.1;
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::relu(v[0]), wmk); }, {x});
        break;
      }
      case 6: {
        const std::size_t r = rng.below(m);
        const T2 w = rand(m, k + n);
        err = gradcheck(
            [&](Tape<double>&, const auto& v) { return reduce(ops::concat_broadcast_row(v[0], v[1], r), w); },
            {rand(m, k), rand(m, n)});
        break;
      }
      case 7: {
        const std::size_t d = k + 1;
        const T2 w = rand(m, d);
        err = gradcheck(
            [&](Tape<double>&, const auto& v) { return reduce(ops::layer_norm(v[0], v[1], v[2], 1e-5), w); },
            {rand(m, d), rand(1, d), rand(1, d)});
        break;
      }
      case 8: {
        const T2 msk = rand(m, k);
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::mask(v[0], msk), wmk); },
                        {rand(m, k)});
        break;
      }
      case 9: {
        const T2 w = rand(1, k);
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::mean_rows(v[0]), w); },
                        {rand(m, k)});
        break;
      }
      case 10: {
        const T2 w = rand(m + n, k);
        err = gradcheck(
            [&](Tape<double>&, const auto& v) {
              return reduce(ops::concat_rows(std::vector<Var<double>>{v[0], v[1]}), w);
            },
            {rand(m, k), rand(n, k)});
        break;
      }
      case 11: {
        T2 x = rand(m, k);
        for (std::size_t r = 0; r < m; ++r) x(r, 0) += 2.0;  // no zero rows
        err = gradcheck([&](Tape<double>&, const auto& v) { return reduce(ops::l2_normalize_rows(v[0]), wmk); },
                        {x});
        break;
      }
    }
    EXPECT_LT(err, kTol) << "op " << op << " shape " << m << "x" << k << "x" << n;
  }
}

TEST_F(PrimitiveGradients, CrossEntropyAndMaskedLikelihood) {
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = dim(), c = 2 + rng.below(4);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.below(c));
    EXPECT_LT(gradcheck([&](Tape<double>&, const auto& v) { return ops::cross_entropy(v[0], std::span<const int>(labels)); },
                        {rand(n, c)}),
              1e-4);
    const std::size_t m = dim();
    T2 w(n, m);
    std::vector<unsigned char> in(n * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      in[i * m + rng.below(m)] = 1;
      for (std::size_t j = 0; j < m; ++j) {
        if (rng.bernoulli(0.6)) in[i * m + j] = 1;
        if (in[i * m + j] && rng.bernoulli(0.5)) w(i, j) = rng.uniform(0.1, 1.0);
      }
    }
    EXPECT_LT(gradcheck([&](Tape<double>&, const auto& v) { return ops::masked_log_likelihood(v[0], w, in, 3.0); },
                        {rand(n, m)}),
              1e-4);
  }
}

TEST(Tape, GradientsAreBitwiseDeterministic) {
  auto run = [] {
    RandomStream rng(99);
    Tape<double> t;
    auto a = t.parameter(random_tensor(4, 5, rng));
    auto b = t.parameter(random_tensor(5, 3, rng));
    auto y = ops::sum(ops::relu(ops::matmul(a, b)));
    t.backward(y);
    return std::pair{t.grad(a), t.grad(b)};
  };
  EXPECT_EQ(run(), run());
}

TEST(Tape, ConstantsRecordNoGradient) {
  Tape<double> t;
  auto a = t.constant(T2(2, 2, 1.0));
  auto b = t.parameter(T2(2, 2, 2.0));
  auto y = ops::sum(ops::matmul(a, b));
  t.backward(y);
  EXPECT_FALSE(t.requires_grad(a));
  EXPECT_EQ(t.grad(a), T2(2, 2));
  EXPECT_EQ(t.grad(b), T2(2, 2, 2.0));
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape<double> t;
  auto a = t.parameter(T2(2, 2, 1.0));
  EXPECT_THROW(t.backward(a), ShapeError);
}

}  // namespace
}  // namespace rumorgraph

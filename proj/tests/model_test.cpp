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

#include <Eigen/Dense>

#include <numeric>
#include <sstream>

#include "rumorgraph/model.hpp"
#include "support.hpp"

namespace rumorgraph {
namespace {

using testing::random_params;
using testing::random_tensor;

Eigen::MatrixXd to_eigen(const Tensor<double>& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

Eigen::MatrixXd layer_norm_oracle(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& g,
                                  const Eigen::RowVectorXd& b, double eps) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    out.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + eps) * g.array() + b.array()).matrix();
  }
  return out;
}

Eigen::MatrixXd with_claim(const Eigen::MatrixXd& h, const Eigen::MatrixXd& prev) {
  Eigen::MatrixXd out(h.rows(), h.cols() + prev.cols());
  out << h, prev.row(0).replicate(h.rows(), 1);
  return out;
}

struct OracleResult {
  Eigen::RowVectorXd o;
  Eigen::RowVectorXd p;
};

// Straight-line eval-mode forward written against Eigen.
OracleResult forward_oracle(const ModelParams<double>& p, const ModelConfig& c,
                            const Tensor<double>& xt, const Tensor<double>& at) {
  const auto x = to_eigen(xt), a = to_eigen(at);
  auto row = [](const Tensor<double>& t) { return Eigen::RowVectorXd(to_eigen(t)); };
  Eigen::MatrixXd h1 = ((a * x * to_eigen(p.w0)).rowwise() + row(p.b0)).cwiseMax(0.0);
  Eigen::MatrixXd h1t = layer_norm_oracle(with_claim(h1, x), row(p.ln1_gain), row(p.ln1_bias),
                                          c.layer_norm_eps);
  Eigen::MatrixXd h2 = ((a * h1t * to_eigen(p.w1)).rowwise() + row(p.b1)).cwiseMax(0.0);
  Eigen::MatrixXd h2t = layer_norm_oracle(with_claim(h2, h1), row(p.ln2_gain), row(p.ln2_bias),
                                          c.layer_norm_eps);
  Eigen::RowVectorXd o = h2t.colwise().mean();
  Eigen::RowVectorXd logits = o * to_eigen(p.wc) + row(p.bc);
  Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return {o, e / e.sum()};
}

TEST(ParamCount, ReferenceConfiguration) {
  EXPECT_EQ(param_count(768, 512, 128, 2), 562818u);
  ModelConfig c;
  c.d_in = 768;
  RandomStream rng(0);
  EXPECT_EQ(init_params<double>(c, rng).count(), 562818u);
}

TEST(ParamCount, SmallestConfiguration) {
  // 1 + 1 + 2*2 + 2*1 + 1 + 2*2 + 2*2 + 2.
  EXPECT_EQ(param_count(1, 1, 1, 2), 19u);
}

TEST(ParamCount, LinearInClasses) {
  EXPECT_EQ(param_count(7, 5, 3, 4) - param_count(7, 5, 3, 2), (3u + 5u) * 2 + 2);
}

TEST(ParamCount, MatchesAllocatedTensors) {
  RandomStream rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig c;
    c.d_in = 1 + rng.below(9);
    c.d_hidden = 1 + rng.below(9);
    c.d_out = 1 + rng.below(9);
    c.classes = 2 + rng.below(3);
    EXPECT_EQ(init_params<double>(c, rng).count(), param_count(c));
  }
}

TEST(ModelConfig, RejectsUnsupportedShapes) {
  ModelConfig c;
  c.layers = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c.layers = 2;
  c.d_hidden = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Forward, MatchesEigenOracle) {
  RandomStream rng(4);
  const auto c = testing::tiny_model();
  for (int trial = 0; trial < 30; ++trial) {
    const auto params = random_params(c, rng);
    const auto ev = testing::random_prepared("e", 1 + rng.below(8), c.d_in, 0, rng);
    const auto got = forward(params, c, ev.x, ev.a_hat);
    const auto want = forward_oracle(params, c, ev.x, ev.a_hat);
    ASSERT_EQ(got.representation.cols(), c.representation_dim());
    for (std::size_t j = 0; j < c.representation_dim(); ++j)
      EXPECT_NEAR(got.representation[j], want.o(static_cast<Eigen::Index>(j)), 1e-12);
    for (std::size_t j = 0; j < c.classes; ++j)
      EXPECT_NEAR(got.probabilities[j], want.p(static_cast<Eigen::Index>(j)), 1e-12);
  }
}

TEST(Forward, SingleNodeRepresentationIsItsOnlyRow) {
  RandomStream rng(5);
  const auto c = testing::tiny_model();
  const auto params = random_params(c, rng);
  const auto x = random_tensor(1, c.d_in, rng);
  const auto r = forward(params, c, x, Tensor<double>::identity(1));
  ASSERT_EQ(r.node_states.rows(), 1u);
  for (std::size_t j = 0; j < c.representation_dim(); ++j)
    EXPECT_EQ(r.representation[j], r.node_states[j]);
}

TEST(Forward, InvariantToReplyOrder) {
  RandomStream rng(6);
  const auto c = testing::tiny_model();
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = random_params(c, rng);
    const std::size_t n = 2 + rng.below(10);
    const auto ev = testing::random_prepared("e", n, c.d_in, 0, rng);
    std::vector<std::size_t> pi(n);
    std::iota(pi.begin(), pi.end(), 0);
    for (std::size_t k = n - 1; k > 1; --k) std::swap(pi[k], pi[1 + rng.below(k)]);
    Tensor<double> x(n, c.d_in), a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c.d_in; ++j) x(pi[i], j) = ev.x(i, j);
      for (std::size_t j = 0; j < n; ++j) a(pi[i], pi[j]) = ev.a_hat(i, j);
    }
    const auto r0 = forward(params, c, ev.x, ev.a_hat);
    const auto r1 = forward(params, c, x, a);
    for (std::size_t j = 0; j < c.representation_dim(); ++j)
      EXPECT_NEAR(r0.representation[j], r1.representation[j], 1e-10);
  }
}

TEST(Forward, SoftmaxIsPositiveAndNormalized) {
  RandomStream rng(7);
  auto c = testing::tiny_model();
  c.classes = 3;
  for (int trial = 0; trial < 50; ++trial) {
    auto params = random_params(c, rng);
    for (auto& v : params.wc.values()) v *= 20.0;
    const auto ev = testing::random_prepared("e", 1 + rng.below(6), c.d_in, 0, rng);
    const auto r = forward(params, c, ev.x, ev.a_hat);
    double total = 0.0;
    for (double v : r.probabilities.values()) {
      EXPECT_GT(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Forward, RejectsMismatchedShapes) {
  RandomStream rng(8);
  const auto c = testing::tiny_model();
  const auto params = random_params(c, rng);
  EXPECT_THROW(forward(params, c, random_tensor(3, c.d_in, rng), Tensor<double>::identity(2)),
               ShapeError);
  EXPECT_THROW(forward(params, c, random_tensor(2, c.d_in + 1, rng), Tensor<double>::identity(2)),
               ShapeError);
}

TEST(Encode, TrainModeWithoutDropoutEqualsEval) {
  RandomStream rng(9);
  auto c = testing::tiny_model();
  c.dropout = 0.0;
  const auto params = random_params(c, rng);
  const auto ev = testing::random_prepared("e", 5, c.d_in, 0, rng);
  Tape<double> tape;
  const auto vars = bind(tape, params, false);
  const auto train = encode(vars, c, ev.x, ev.a_hat, Mode::kTrain, &rng).representation.value();
  const auto eval = forward(params, c, ev.x, ev.a_hat).representation;
  for (std::size_t j = 0; j < eval.size(); ++j) EXPECT_EQ(train[j], eval[j]);
}

TEST(Encode, FullDropoutSilencesFirstLayer) {
  RandomStream rng(10);
  auto c = testing::tiny_model();
  c.dropout = 1.0;
  auto params = random_params(c, rng);
  const auto ev = testing::random_prepared("e", 4, c.d_in, 0, rng);
  Tape<double> tape;
  const auto vars = bind(tape, params, false);
  const auto enc = encode(vars, c, ev.x, ev.a_hat, Mode::kTrain, &rng);
  // With the first layer zeroed, H2 = ReLU(b1) on every row.
  const auto rep = enc.representation.value();
  auto shifted = params;
  shifted.w1 = Tensor<double>(params.w1.rows(), params.w1.cols());
  shifted.ln1_bias = Tensor<double>(1, params.ln1_bias.cols());
  const auto want = forward_oracle(shifted, c, ev.x, ev.a_hat);
  for (std::size_t j = 0; j < rep.size(); ++j)
    EXPECT_NEAR(rep[j], want.o(static_cast<Eigen::Index>(j)), 1e-12);
}

TEST(Encode, TrainModeRequiresStream) {
  RandomStream rng(11);
  const auto c = testing::tiny_model();
  const auto params = random_params(c, rng);
  const auto ev = testing::random_prepared("e", 3, c.d_in, 0, rng);
  Tape<double> tape;
  const auto vars = bind(tape, params, false);
  EXPECT_THROW(encode(vars, c, ev.x, ev.a_hat, Mode::kTrain), ConfigError);
}

TEST(Gradients, MatchFiniteDifferences) {
  RandomStream rng(12);
  const auto c = testing::tiny_model();
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = random_params(c, rng);
    const auto ev = testing::random_prepared("e", 1 + rng.below(5), c.d_in,
                                             static_cast<int>(rng.below(2)), rng);
    const auto weights = random_tensor(1, c.representation_dim(), rng);
    const std::vector<int> label{ev.label};
    testing::ScalarFn f = [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
      ParamVars<double> p{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
      const auto enc = encode(p, c, ev.x, ev.a_hat, Mode::kEval);
      const auto ce = ops::cross_entropy(classify(p, enc.representation), std::span<const int>(label));
      const auto probe = ops::sum(ops::mask(enc.representation, weights));
      (void)tape;
      return ops::add(ce, probe);
    };
    std::vector<Tensor<double>> inputs;
    for (const auto* t : params.tensors()) inputs.push_back(*t);
    EXPECT_LT(testing::gradcheck(f, inputs), 1e-4) << "trial " << trial;
  }
}

TEST(Snapshot, RoundTripIsBitExact) {
  RandomStream rng(13);
  const auto c = testing::tiny_model();
  const auto params = random_params(c, rng);
  std::stringstream buf;
  write_snapshot(buf, SnapshotHeader{c, 99, "hashed:6:0"}, params);
  const auto back = read_snapshot<double>(buf);
  EXPECT_EQ(back.header.config, c);
  EXPECT_EQ(back.header.seed, 99u);
  EXPECT_EQ(back.header.embedding, "hashed:6:0");
  EXPECT_TRUE(back.params == params);
}

TEST(Snapshot, TensorsFollowFixedOrderInLittleEndian) {
  const auto c = testing::tiny_model(1);
  RandomStream rng(14);
  auto params = init_params<double>(c, rng);
  params.w0 = Tensor<double>(1, c.d_hidden, 0.0);
  params.w0[0] = 1.0;
  std::stringstream buf;
  write_snapshot(buf, SnapshotHeader{c, 0, ""}, params);
  std::string header;
  std::getline(buf, header);
  EXPECT_NE(header.find("\"W0\""), std::string::npos);
  unsigned char bytes[8];
  buf.read(reinterpret_cast<char*>(bytes), 8);
  // 1.0 is 0x3ff0000000000000.
  const unsigned char want[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(bytes[i], want[i]);
}

TEST(Snapshot, RejectsTruncatedAndForeignFiles) {
  RandomStream rng(15);
  const auto c = testing::tiny_model();
  const auto params = random_params(c, rng);
  std::stringstream buf;
  write_snapshot(buf, SnapshotHeader{c, 1, ""}, params);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_snapshot<double>(truncated), FormatError);
  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_snapshot<double>(trailing), FormatError);
  std::stringstream foreign("{\"format\":\"other\"}\n");
  EXPECT_THROW(read_snapshot<double>(foreign), FormatError);
}

}  // namespace
}  // namespace rumorgraph

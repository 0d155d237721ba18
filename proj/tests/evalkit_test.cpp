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
#include <sstream>

#include "rumorgraph/evalkit.hpp"
#include "eigen_oracles.hpp"
#include "support.hpp"

namespace rumorgraph {
namespace {

using testing::random_tensor;

TEST(Metrics, PerfectPredictions) {
  const std::vector<int> y{1, 0, 1, 0, 0};
  const auto m = compute_metrics(y, y);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.macro_f1, 1.0);
}

TEST(Metrics, AllRumorOnBalancedSet) {
  const auto m = compute_metrics(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 1, 0, 0});
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_NEAR(m.f1_rumor, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m.f1_nonrumor, 0.0);
  EXPECT_NEAR(m.macro_f1, 1.0 / 3.0, 1e-15);
}

TEST(Metrics, RejectsMismatchAndEmpty) {
  EXPECT_THROW(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}), ShapeError);
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}), ShapeError);
}

TEST(Metrics, PropertiesOnRandomLists) {
  RandomStream rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.below(2));
      y[i] = static_cast<int>(rng.below(2));
    }
    const auto m = compute_metrics(p, y);
    EXPECT_EQ(m.macro_f1, (m.f1_rumor + m.f1_nonrumor) / 2.0);
    EXPECT_EQ(m.rumor.tp + m.rumor.fp + m.rumor.fn + m.rumor.tn, n);
    for (double v : {m.accuracy, m.macro_f1, m.f1_rumor, m.f1_nonrumor}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // Confusion-matrix F1 computed independently.
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += p[i] == 1 && y[i] == 1;
      fp += p[i] == 1 && y[i] == 0;
      fn += p[i] == 0 && y[i] == 1;
    }
    EXPECT_NEAR(m.f1_rumor, tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn), 1e-15);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::vector<int> p2(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = p[order[i]];
      y2[i] = y[order[i]];
    }
    EXPECT_EQ(compute_metrics(p2, y2), m);
  }
}

TEST(Metrics, FormatsThreeDecimals) {
  const auto m = compute_metrics(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 1, 0, 0});
  EXPECT_EQ(format_metrics(m), "Acc. 0.500  Mac-F1 0.333  F1(R) 0.667  F1(N) 0.000");
}

TEST(Metrics, FoldMeanAveragesScoresAndSumsCounts) {
  const auto a = compute_metrics(std::vector<int>{1, 0}, std::vector<int>{1, 0});
  const auto b = compute_metrics(std::vector<int>{1, 1}, std::vector<int>{1, 0});
  const std::vector<Metrics> folds{a, b};
  const auto m = mean_metrics(folds);
  EXPECT_EQ(m.count, 4u);
  EXPECT_EQ(m.accuracy, 0.75);
  EXPECT_EQ(m.macro_f1, (a.macro_f1 + b.macro_f1) / 2.0);
  EXPECT_EQ(m.rumor.tp, 2u);
}

void expect_matches_oracle(std::size_t n, std::size_t d, RandomStream& rng) {
  // Distinct column scales keep the eigenvalues well separated.
  auto data = random_tensor(n, d, rng);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) data(i, j) *= 1.0 + 0.6 * double(d - j);
  std::vector<double> explained;
  const auto want = oracles::pca(data, 2, &explained);
  const auto got = pca_project(data);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_NEAR(got.coordinates(i, k), want(Eigen::Index(i), Eigen::Index(k)), 1e-8);
  EXPECT_NEAR(got.explained[0], explained[0], 1e-10);
  EXPECT_NEAR(got.explained[1], explained[1], 1e-10);
  EXPECT_GE(got.explained[0], got.explained[1]);
  EXPECT_LE(got.explained[0] + got.explained[1], 1.0 + 1e-12);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += got.coordinates(i, k);
    EXPECT_NEAR(mean / double(n), 0.0, 1e-9);
  }
}

TEST(Pca, MatchesEigenOracleTallData) {
  RandomStream rng(2);
  for (int trial = 0; trial < 10; ++trial) expect_matches_oracle(50, 16, rng);
}

TEST(Pca, MatchesEigenOracleWideData) {
  RandomStream rng(3);
  for (int trial = 0; trial < 10; ++trial) expect_matches_oracle(10, 40, rng);
}

TEST(Pca, AxisAlignedGaussianRecoversAxes) {
  RandomStream rng(4);
  Tensor<double> data(400, 2);
  for (std::size_t i = 0; i < 400; ++i) {
    // Box-Muller draws with standard deviations 5 and 1.
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    data(i, 0) = 5.0 * r * std::cos(2 * M_PI * u2);
    data(i, 1) = r * std::sin(2 * M_PI * u2);
  }
  const auto f = pca_project(data);
  EXPECT_GT(std::abs(f.components(0, 0)), 0.99);
  EXPECT_GT(std::abs(f.components(1, 1)), 0.99);
}

TEST(Pca, DegenerateInputs) {
  Tensor<double> same(5, 3, 2.5);
  EXPECT_THROW(pca_project(same), DegenerateDataError);
  EXPECT_THROW(pca_project(Tensor<double>(1, 3, 1.0)), DegenerateDataError);
}

TEST(Pca, JacobiReconstructsMatrix) {
  RandomStream rng(5);
  auto a = random_tensor(7, 7, rng);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  const auto eig = jacobi_eigen(a);
  for (std::size_t k = 1; k < 7; ++k) EXPECT_GE(eig.values[k - 1], eig.values[k]);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 7; ++k) acc += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
      EXPECT_NEAR(acc, a(i, j), 1e-10);
    }
}

TEST(Pca, CsvAndSidecar) {
  Tensor<double> data = Tensor<double>::from_rows({{0, 0}, {2, 0}, {0, 1}});
  const auto f = pca_project(data);
  std::ostringstream csv;
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<int> labels{1, 0, 1};
  write_pca_csv(csv, f, ids, labels);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "event_id,label,x,y");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("a,rumor,", 0), 0u);
  EXPECT_EQ(pca_sidecar(f)["explained_variance"].size(), 2u);
}

class EarlyDetection : public ::testing::Test {
 protected:
  EarlyDetection() : provider_(6, 3), cfg_(testing::tiny_model()) {
    RandomStream rng(6);
    params_ = init_params<double>(cfg_, rng);
    params_.bc = random_tensor(1, 2, rng);
    for (std::size_t i = 0; i < 12; ++i)
      events_.push_back(testing::random_event("ev" + std::to_string(i), 2 + rng.below(8), rng,
                                              static_cast<Label>(i % 2)));
  }
  HashedProvider provider_;
  ModelConfig cfg_;
  ModelParams<double> params_;
  std::vector<Event> events_;
};

TEST_F(EarlyDetection, UnboundedCheckpointReproducesFullEvaluation) {
  const CheckpointSpec spec{CheckpointMode::kPostCount, {1, 3, std::numeric_limits<double>::infinity()}};
  const auto curve = early_detection(params_, cfg_, events_, spec, provider_);
  const auto full = evaluate<double>(params_, cfg_, prepare_events<double>(events_, provider_));
  EXPECT_EQ(curve.rows.back(), full);
}

TEST_F(EarlyDetection, FirstPostCheckpointIsClaimOnly) {
  std::vector<Event> claims;
  for (const auto& e : events_) {
    Event c = e;
    c.posts.resize(1);
    claims.push_back(c);
  }
  const CheckpointSpec spec{CheckpointMode::kPostCount, {1}};
  const auto curve = early_detection(params_, cfg_, events_, spec, provider_);
  EXPECT_EQ(curve.rows[0], evaluate<double>(params_, cfg_, prepare_events<double>(claims, provider_)));
}

TEST_F(EarlyDetection, ElapsedTimeBeyondAllPostsIsFullEvaluation) {
  const CheckpointSpec spec{CheckpointMode::kElapsedTime, {1e9}};
  const auto curve = early_detection(params_, cfg_, events_, spec, provider_);
  EXPECT_EQ(curve.rows[0], evaluate<double>(params_, cfg_, prepare_events<double>(events_, provider_)));
}

TEST_F(EarlyDetection, FourCheckpointCsv) {
  const CheckpointSpec spec{CheckpointMode::kPostCount, {1, 2, 4, std::numeric_limits<double>::infinity()}};
  const auto curve = early_detection(params_, cfg_, events_, spec, provider_);
  ASSERT_EQ(curve.rows.size(), 4u);
  std::ostringstream out;
  write_curve_csv(out, curve);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "checkpoint,accuracy,macro_f1,f1_rumor,f1_nonrumor");
  const char* first[] = {"1,", "2,", "4,", "inf,"};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].rfind(first[i - 1], 0), 0u) << rows[i];
    EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 4);
    std::istringstream fields(rows[i].substr(rows[i].find(',') + 1));
    std::string field;
    while (std::getline(fields, field, ',')) {
      const double v = std::stod(field);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST_F(EarlyDetection, RejectsDescendingCheckpoints) {
  const CheckpointSpec spec{CheckpointMode::kPostCount, {3, 2}};
  EXPECT_THROW(early_detection(params_, cfg_, events_, spec, provider_), ConfigError);
}

}  // namespace
}  // namespace rumorgraph

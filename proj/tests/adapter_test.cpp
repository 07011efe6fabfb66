#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "chainrec/adapter.hpp"
#include "chainrec/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "planted.hpp"

namespace chainrec {
namespace {

namespace fs = std::filesystem;

const double kLn2 = std::log(2.0);

double frobenius_diff(const Matrix& a, const Matrix& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

AdapterParams random_params(testing::Random& rng, std::size_t dim, double tau, double lambda) {
  AdapterParams p;
  p.weights = Matrix::identity(dim);
  for (auto& v : p.weights.data()) v += rng.uniform(-0.5, 0.5);
  p.temperature = tau;
  p.reg_weight = lambda;
  return p;
}

TEST(Bce, ClosedForms) {
  EXPECT_NEAR(bce_with_logit(0.0, 1.0), kLn2, 1e-15);
  EXPECT_NEAR(bce_with_logit(0.0, 0.0), kLn2, 1e-15);
  EXPECT_NEAR(bce_with_logit(1000.0, 1.0), 0.0, 1e-300);
  EXPECT_NEAR(bce_with_logit(-1000.0, 1.0), 1000.0, 1e-9);
  EXPECT_NEAR(bce_with_logit(1000.0, 0.0), 1000.0, 1e-9);
  EXPECT_NEAR(bce_with_logit(2.0, 1.0), std::log1p(std::exp(-2.0)), 1e-15);
}

TEST(Loss, ZeroSimilarityClosedForms) {
  const Matrix zero(2, 2, 0.0);
  const std::vector<int> labels = {1, 0};
  EXPECT_NEAR(contrastive_loss(zero, labels, 1.0), 2.0 * kLn2, 1e-12);
  EXPECT_NEAR(contrastive_loss(zero, labels, 0.0), kLn2, 1e-12);
  const Matrix zero5(5, 5, 0.0);
  EXPECT_NEAR(contrastive_loss(zero5, std::vector<int>(5, 1), 0.5), 1.5 * kLn2, 1e-12);
}

TEST(Loss, BatchOfOne) {
  const Matrix one(1, 1, 3.0);
  EXPECT_THROW(contrastive_loss(one, std::vector<int>{1}, 1.0), DataError);
  EXPECT_NEAR(contrastive_loss(one, std::vector<int>{1}, 0.0), bce_with_logit(3.0, 1.0), 1e-15);
}

TEST(Loss, MatchesHighPrecisionOracle) {
  testing::Random rng(101);
  for (int round = 0; round < 200; ++round) {
    const std::size_t b = 2 + rng.below(8);
    Matrix s = testing::random_matrix(rng, b, b, -40.0, 40.0);
    std::vector<int> labels;
    for (std::size_t i = 0; i < b; ++i) labels.push_back(rng.coin() ? 1 : 0);
    const double lambda = rng.coin() ? 0.0 : rng.uniform(0.0, 2.0);
    const double expected = testing::loss_oracle(s, labels, lambda);
    const double got = contrastive_loss(s, labels, lambda);
    EXPECT_LE(std::abs(got - expected), 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Adapter, ApplyMatchesOracle) {
  testing::Random rng(4);
  for (int round = 0; round < 100; ++round) {
    const std::size_t dim = 1 + rng.below(8);
    const auto p = random_params(rng, dim, 20.0, 1.0);
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const auto got = apply_adapter(p, x);
    const auto want = testing::adapter_oracle(p.weights, x);
    for (std::size_t d = 0; d < dim; ++d) EXPECT_NEAR(got[d], want[d], 1e-12);
  }
  AdapterParams p{Matrix(2, 2, 0.0), 20.0, 1.0};
  EXPECT_THROW(apply_adapter(p, std::vector<double>{1.0, 0.0}), DataError);
  EXPECT_THROW(apply_adapter(AdapterParams{Matrix::identity(2), 20.0, 1.0}, std::vector<double>{1.0}),
               DataError);
}

TEST(Adapter, SimilarityIsTemperatureTimesCosine) {
  testing::Random rng(6);
  const auto p = random_params(rng, 4, 7.5, 1.0);
  const auto batch = testing::random_batch(rng, 3, 4);
  const auto s = similarity_matrix(p, batch);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto q = batch.queries.row(i);
      const auto t = batch.targets.row(j);
      const auto hq = testing::adapter_oracle(p.weights, {q.begin(), q.end()});
      const auto ht = testing::adapter_oracle(p.weights, {t.begin(), t.end()});
      double dot = 0.0;
      for (std::size_t d = 0; d < 4; ++d) dot += hq[d] * ht[d];
      EXPECT_NEAR(s(i, j), 7.5 * dot, 1e-12);
    }
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  testing::Random rng(77);
  for (int round = 0; round < 100; ++round) {
    const std::size_t b = 2 + rng.below(5);
    const auto p = random_params(rng, 4, rng.uniform(1.0, 20.0), rng.coin() ? 0.0 : 1.0);
    const auto batch = testing::random_batch(rng, b, 4);
    const auto analytic = loss_gradient(p, batch);
    const auto numeric = testing::finite_difference_gradient(p, batch, 1e-6);
    double fd_norm = 0.0;
    for (double v : numeric.data()) fd_norm += v * v;
    fd_norm = std::sqrt(fd_norm);
    const double rel = frobenius_diff(analytic.gradient, numeric) / std::max(fd_norm, 1e-8);
    EXPECT_LE(rel, 1e-4) << "round " << round;
    EXPECT_NEAR(analytic.loss, contrastive_loss(similarity_matrix(p, batch), batch.labels, p.reg_weight),
                1e-12);
  }
}

TEST(Gradient, StationaryAtIdentityForParallelPairs) {
  testing::Random rng(9);
  TrainBatch batch{Matrix(3, 5), Matrix(3, 5), {1, 0, 1}};
  for (std::size_t i = 0; i < 3; ++i) {
    const double scale = rng.uniform(0.5, 3.0);
    for (std::size_t d = 0; d < 5; ++d) {
      batch.queries(i, d) = rng.uniform(-1, 1);
      batch.targets(i, d) = scale * batch.queries(i, d);
    }
  }
  const AdapterParams p{Matrix::identity(5), 20.0, 0.0};
  const auto g = loss_gradient(p, batch);
  for (double v : g.gradient.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Training, ZeroLearningRateLeavesWeights) {
  const auto data = testing::simplex_training_set(4, 3, 0.05, 1);
  TrainHyper hyper;
  hyper.learning_rate = 0.0;
  hyper.epochs = 3;
  const auto result = train_adapter(data, hyper);
  TrainHyper no_epochs = hyper;
  no_epochs.epochs = 0;
  EXPECT_EQ(result.params, train_adapter(data, no_epochs).params);
  for (double l : result.epoch_losses) EXPECT_EQ(l, result.initial_loss);
}

TEST(Training, DeterministicPerSeed) {
  const auto data = testing::simplex_training_set(4, 4, 0.05, 2);
  TrainHyper hyper;
  hyper.epochs = 5;
  const auto a = train_adapter(data, hyper);
  const auto b = train_adapter(data, hyper);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  hyper.seed = 8;
  EXPECT_NE(train_adapter(data, hyper).params, a.params);
}

TEST(Training, HalvesLossOnSimplexSet) {
  const auto data = testing::simplex_training_set(4, 4, 0.05, 3);
  const auto result = train_adapter(data, TrainHyper{});
  ASSERT_EQ(result.epoch_losses.size(), 50u);
  EXPECT_LT(result.epoch_losses.back(), 0.5 * result.initial_loss);
  EXPECT_NEAR(result.initial_loss, mean_loss(AdapterParams{Matrix::identity(4), 20.0, 1.0}, data), 0.05);
}

TEST(Training, RejectsBadInput) {
  EXPECT_THROW(train_adapter({}, TrainHyper{}), DataError);
  TrainHyper neg;
  neg.epochs = -1;
  EXPECT_THROW(train_adapter(testing::simplex_training_set(3, 1, 0.0, 1), neg), UsageError);
  TrainBatch bad{Matrix(2, 3), Matrix(2, 3), {1, 2}};
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  testing::Random rng(12);
  const auto p = random_params(rng, 6, 12.5, 0.25);
  const auto path = fs::temp_directory_path() / "chainrec_adapter_test.ckpt";
  p.save(path);
  EXPECT_EQ(AdapterParams::load(path), p);
  EXPECT_EQ(fs::file_size(path), 4u + 8 + 8 + 36 * 8);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << 'x';
  }
  EXPECT_THROW(AdapterParams::load(path), DataError);
  fs::resize_file(path, 10);
  EXPECT_THROW(AdapterParams::load(path), DataError);
  fs::remove(path);

  AdapterParams bad = p;
  bad.temperature = 0.0;
  EXPECT_THROW(bad.validate(), DataError);
  bad = p;
  bad.weights(0, 0) = NAN;
  EXPECT_THROW(bad.validate(), DataError);
  bad = p;
  bad.weights = Matrix(2, 3);
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(Batches, NoSharedKeysWithinABatch) {
  testing::Random rng(15);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = rng.below(60);
    std::vector<std::vector<double>> q, t;
    std::vector<std::string> qk, tk;
    for (std::size_t i = 0; i < n; ++i) {
      q.push_back({static_cast<double>(i), 1.0});
      t.push_back({1.0, static_cast<double>(i)});
      qk.push_back("q" + std::to_string(rng.below(8)));
      tk.push_back("t" + std::to_string(rng.below(12)));
    }
    const std::size_t size = 2 + rng.below(6);
    const auto batches = make_train_batches(q, t, qk, tk, size, 5);
    std::size_t packed = 0;
    for (const auto& b : batches) {
      EXPECT_GE(b.size(), 2u);
      EXPECT_LE(b.size(), size);
      std::set<std::string> qs, ts;
      for (std::size_t r = 0; r < b.size(); ++r) {
        const auto i = static_cast<std::size_t>(b.queries(r, 0));
        EXPECT_EQ(b.targets(r, 1), static_cast<double>(i));
        EXPECT_TRUE(qs.insert(qk[i]).second);
        EXPECT_TRUE(ts.insert(tk[i]).second);
        EXPECT_EQ(b.labels[r], 1);
      }
      packed += b.size();
    }
    EXPECT_LE(packed, n);
    const auto again = make_train_batches(q, t, qk, tk, size, 5);
    ASSERT_EQ(again.size(), batches.size());
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].queries, batches[i].queries);
  }
  EXPECT_THROW(make_train_batches({{1.0}}, {{1.0}}, {"a"}, {"b"}, 1, 0), UsageError);
}

TEST(LossTrace, OneLinePerEpochPlusInitial) {
  TrainResult r;
  r.initial_loss = 1.0;
  r.epoch_losses = {0.8, 0.5};
  std::ostringstream out;
  write_loss_trace(r, out);
  EXPECT_EQ(out.str(), "{\"epoch\":0,\"loss\":1.0}\n{\"epoch\":1,\"loss\":0.8}\n{\"epoch\":2,\"loss\":0.5}\n");
}

}  // namespace
}  // namespace chainrec

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <sparsembed/spine.hpp>

#include "oracles.hpp"

using namespace sparsembed;

namespace {

std::vector<std::span<double>> blocks(SpineModel& m) {
  return {m.enc_weights.data(), m.enc_bias, m.dec_weights.data(), m.dec_bias};
}

SpineModel random_model(SeededRng& rng, std::size_t l, std::size_t k) {
  auto m = SpineModel::zeros(l, k);
  for (auto b : blocks(m))
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
  for (double& v : m.enc_bias) v = rng.uniform(0.0, 1.0);
  return m;
}

Matrix uniform_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

SpineConfig weights(double l1, double l2, double l3, double rho = 0.15) {
  SpineConfig c;
  c.lambda1 = l1;
  c.lambda2 = l2;
  c.lambda3 = l3;
  c.rho_star = rho;
  return c;
}

SpineModel identity_model(std::size_t n) {
  auto m = SpineModel::zeros(n, n);
  m.enc_weights = Matrix::identity(n);
  m.dec_weights = Matrix::identity(n);
  return m;
}

}  // namespace

TEST(SpineForward, ClampRule) {
  auto m = SpineModel::zeros(1, 3);
  m.enc_weights = Matrix(3, 1, {-0.2, 0.5, 1.3});
  const auto f = spine_forward(m, Matrix(1, 1, {1.0}));
  EXPECT_EQ(f.activations, Matrix(1, 3, {0.0, 0.5, 1.0}));
  EXPECT_EQ(f.pre, Matrix(1, 3, {-0.2, 0.5, 1.3}));
}

TEST(SpineForward, ZeroModelAndIdentity) {
  SeededRng rng(1);
  const Matrix x = uniform_matrix(rng, 5, 4, 0.0, 1.0);
  const auto zero = spine_forward(SpineModel::zeros(4, 6), x);
  for (double v : zero.activations.data()) EXPECT_EQ(v, 0.0);
  for (double v : zero.reconstruction.data()) EXPECT_EQ(v, 0.0);
  const auto id = spine_forward(identity_model(4), x);
  EXPECT_EQ(id.reconstruction, x);
  EXPECT_EQ(id.activations, x);
}

TEST(SpineForward, ShapeAndFiniteness) {
  EXPECT_THROW(spine_forward(SpineModel::zeros(3, 2), Matrix(1, 4)), std::invalid_argument);
  auto m = SpineModel::zeros(2, 2);
  m.enc_bias[0] = std::nan("");
  EXPECT_THROW(spine_forward(m, Matrix(1, 2)), std::invalid_argument);
  auto bad = SpineModel::zeros(2, 2);
  bad.dec_bias.push_back(0.0);
  EXPECT_THROW(spine_forward(bad, Matrix(1, 2)), std::invalid_argument);
}

TEST(SpineLoss, AllTermsVanish) {
  Matrix x(7, 2);
  x(1, 0) = 1.0;  // one of seven rows active: rho_hat = 1/7 < 0.15
  const auto l = spine_loss(identity_model(2), x, weights(1, 1, 1));
  EXPECT_EQ(l.total, 0.0);
  EXPECT_EQ(l.rl, 0.0);
  EXPECT_EQ(l.asl, 0.0);
  EXPECT_EQ(l.psl, 0.0);
}

TEST(SpineLoss, AverageSparsityTerm) {
  auto m = SpineModel::zeros(1, 1);
  m.enc_weights(0, 0) = 1.0;
  const Matrix x(4, 1, {0, 0, 0, 1});
  const auto l = spine_loss(m, x, weights(0, 1, 0, 0.15));
  EXPECT_DOUBLE_EQ(l.rho_hat[0], 0.25);
  EXPECT_NEAR(l.asl, 0.01, 1e-15);
  EXPECT_NEAR(l.total, 0.01, 1e-15);
}

TEST(SpineLoss, PartialSparsityTerm) {
  auto m = SpineModel::zeros(1, 1);
  m.enc_bias[0] = 0.5;
  const auto l = spine_loss(m, Matrix(1, 1, {0.0}), weights(0, 0, 1));
  EXPECT_DOUBLE_EQ(l.psl, 0.25);
}

TEST(SpineLoss, TotalIsWeightedSumAndTermsAreConsistent) {
  SeededRng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto m = random_model(rng, 3, 5);
    const Matrix x = uniform_matrix(rng, 1 + rng.below(6), 3, -1.0, 1.0);
    const auto cfg = weights(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.05, 0.9));
    const auto l = spine_loss(m, x, cfg);
    EXPECT_NEAR(l.total, cfg.lambda1 * l.rl + cfg.lambda2 * l.asl + cfg.lambda3 * l.psl, 1e-10);
    EXPECT_GE(l.rl, 0.0);
    EXPECT_GE(l.asl, 0.0);
    EXPECT_GE(l.psl, 0.0);
    bool all_below = true;
    for (double r : l.rho_hat) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
      all_below = all_below && r <= cfg.rho_star;
    }
    if (all_below) {
      EXPECT_EQ(l.asl, 0.0);
    }
  }
  EXPECT_THROW(spine_loss(SpineModel::zeros(2, 2), Matrix(0, 2), weights(1, 1, 1)), std::invalid_argument);
}

TEST(SpineGradients, SaturatedActivationsBlockEncoderFlow) {
  auto m = SpineModel::zeros(2, 3);
  m.enc_bias = {-1.0, 2.0, 5.0};
  SeededRng rng(3);
  for (double& v : m.dec_weights.data()) v = rng.uniform(-1, 1);
  const Matrix x(3, 2, {0.1, 0.2, 0.3, 0.4, -0.1, 0.5});
  const auto g = spine_gradients(m, x, weights(1, 0, 0));
  for (double v : g.enc_weights.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.enc_bias) EXPECT_EQ(v, 0.0);
  double dec = 0.0;
  for (double v : g.dec_weights.data()) dec += std::abs(v);
  EXPECT_GT(dec, 0.0);
}

TEST(SpineGradients, BoundaryTakesZeroSubgradient) {
  auto m = SpineModel::zeros(1, 2);
  m.enc_bias = {0.0, 1.0};  // exactly on the boundaries
  m.dec_weights = Matrix(1, 2, {1.0, 1.0});
  const auto g = spine_gradients(m, Matrix(1, 1, {0.0}), weights(1, 1, 1));
  EXPECT_EQ(g.enc_bias[0], 0.0);
  EXPECT_EQ(g.enc_bias[1], 0.0);
}

TEST(SpineGradients, ZeroWeightsGiveZeroGradients) {
  SeededRng rng(4);
  const auto m = random_model(rng, 4, 6);
  const Matrix x = uniform_matrix(rng, 3, 4, -1, 1);
  auto g = spine_gradients(m, x, weights(0, 0, 0));
  for (auto b : blocks(g))
    for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(SpineGradients, MatchCentralFiniteDifferences) {
  SeededRng rng(5);
  const double h = 1e-5;
  int checked = 0;
  for (int attempt = 0; checked < 10 && attempt < 1000; ++attempt) {
    auto m = random_model(rng, 4, 6);
    const Matrix x = uniform_matrix(rng, 3, 4, -1, 1);
    const auto cfg = weights(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.05, 0.5));
    // Skip points near a clamp corner or the ASL hinge, where the
    // perturbation could cross a kink.
    const auto f = spine_forward(m, x);
    bool near_kink = false;
    for (double p : f.pre.data()) near_kink = near_kink || std::abs(p) < 1e-4 || std::abs(p - 1.0) < 1e-4;
    for (double r : spine_loss(m, x, cfg).rho_hat) near_kink = near_kink || std::abs(r - cfg.rho_star) < 1e-4;
    if (near_kink) continue;
    ++checked;

    auto analytic = spine_gradients(m, x, cfg);
    auto mb = blocks(m);
    auto gb = blocks(analytic);
    double worst = 0.0;
    for (std::size_t b = 0; b < mb.size(); ++b) {
      for (std::size_t i = 0; i < mb[b].size(); ++i) {
        const double saved = mb[b][i];
        mb[b][i] = saved + h;
        const double up = spine_loss(m, x, cfg).total;
        mb[b][i] = saved - h;
        const double down = spine_loss(m, x, cfg).total;
        mb[b][i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = gb[b][i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, rel);
      }
    }
    EXPECT_LT(worst, 1e-4) << "point " << checked;
  }
  EXPECT_EQ(checked, 10);
}

TEST(SpineGradients, ThreadCountDoesNotChangeResult) {
  SeededRng rng(6);
  const auto m = random_model(rng, 5, 9);
  const Matrix x = uniform_matrix(rng, 17, 5, -1, 1);
  const auto one = spine_loss_and_gradients(m, x, weights(1, 1, 0.5), 1);
  const auto many = spine_loss_and_gradients(m, x, weights(1, 1, 0.5), 4);
  EXPECT_EQ(one.gradients, many.gradients);
  EXPECT_EQ(one.loss.total, many.loss.total);
}

namespace {

Matrix toy_data(std::uint64_t seed, std::size_t v, std::size_t l) {
  SeededRng rng(seed);
  Matrix x(v, l);
  for (auto& e : x.data()) e = rng.normal();
  return x;
}

SpineConfig small_training(std::size_t hidden) {
  SpineConfig c;
  c.hidden = hidden;
  c.epochs = 20;
  c.batch_size = 16;
  c.learning_rate = 0.05;
  return c;
}

}  // namespace

TEST(SpineTrain, DeterministicAndThreadInvariant) {
  const Matrix x = toy_data(7, 60, 5);
  auto cfg = small_training(12);
  const auto a = spine_train(x, cfg);
  const auto b = spine_train(x, cfg);
  EXPECT_EQ(a.model, b.model);
  cfg.threads = 4;
  EXPECT_EQ(spine_train(x, cfg).model, a.model);
  cfg.optimizer = SpineOptimizer::adam;
  cfg.learning_rate = 0.01;
  cfg.threads = 1;
  const auto c = spine_train(x, cfg);
  cfg.threads = 3;
  EXPECT_EQ(spine_train(x, cfg).model, c.model);
}

TEST(SpineTrain, TraceStartsWithInitialModel) {
  const Matrix x = toy_data(8, 40, 4);
  auto cfg = small_training(8);
  cfg.epochs = 5;
  const auto r = spine_train(x, cfg);
  ASSERT_EQ(r.trace.size(), 6u);
  for (std::size_t e = 0; e < r.trace.size(); ++e) EXPECT_EQ(r.trace[e].epoch, e);
  EXPECT_LT(r.trace.back().loss.total, r.trace.front().loss.total);
  const auto final_loss = spine_loss(r.model, x, cfg);
  EXPECT_DOUBLE_EQ(r.trace.back().loss.total, final_loss.total);
  for (const auto& e : r.trace) {
    EXPECT_GE(e.mean_sparsity, 0.0);
    EXPECT_LE(e.mean_sparsity, 1.0);
  }
}

TEST(SpineTrain, SparseCodesWithGoodReconstruction) {
  const Matrix x = toy_data(9, 200, 10);
  SpineConfig cfg;
  cfg.hidden = 40;
  cfg.optimizer = SpineOptimizer::adam;
  cfg.learning_rate = 0.01;
  cfg.epochs = 300;
  cfg.batch_size = 32;
  cfg.lambda3 = 0.3;
  cfg.rho_star = 0.1;
  const auto r = spine_train(x, cfg);
  const auto z = spine_forward(r.model, x).activations;
  std::size_t active = 0;
  for (double v : z.data()) active += v > 0.01;
  EXPECT_LE(static_cast<double>(active) / static_cast<double>(z.size()), 0.25);
  EXPECT_LT(r.trace.back().loss.rl, r.trace.front().loss.rl / 4.0);
}

TEST(SpineTrain, WithoutSparsityPressureApproachesLinearFloor) {
  const Matrix x = toy_data(10, 100, 4);
  // Least-squares floor of an affine reconstruction of X from its own
  // coordinates through K = L hidden units.
  Matrix design(100, 5);
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t l = 0; l < 4; ++l) design(i, l) = x(i, l);
    design(i, 4) = 1.0;
  }
  const Matrix coef = oracle::ridge_dictionary(x, design, 0.0);
  double floor = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t l = 0; l < 4; ++l) {
      double pred = 0.0;
      for (std::size_t k = 0; k < 5; ++k) pred += design(i, k) * coef(k, l);
      floor += (x(i, l) - pred) * (x(i, l) - pred);
    }
  floor /= 100.0;
  EXPECT_LT(floor, 1e-12);

  SpineConfig cfg;
  cfg.hidden = 4;
  cfg.lambda2 = 0.0;
  cfg.lambda3 = 0.0;
  cfg.optimizer = SpineOptimizer::adam;
  cfg.learning_rate = 0.01;
  cfg.epochs = 1500;
  cfg.batch_size = 100;
  const auto r = spine_train(x, cfg);
  const double initial = r.trace.front().loss.rl, final_rl = r.trace.back().loss.rl;
  EXPECT_LE(final_rl - floor, 0.1 * (initial - floor));
}

TEST(SpineTrain, ExplodingLearningRateIsDivergence) {
  const Matrix x = toy_data(11, 64, 6);
  auto cfg = small_training(12);
  cfg.learning_rate = 50.0;
  cfg.lambda2 = 0.0;
  cfg.lambda3 = 0.0;
  EXPECT_THROW(spine_train(x, cfg), DivergenceError);
}

TEST(SpineTrain, ConfigValidation) {
  const Matrix x = toy_data(12, 10, 3);
  auto cfg = small_training(4);
  cfg.batch_size = 11;
  EXPECT_THROW(spine_train(x, cfg), std::invalid_argument);
  cfg = small_training(4);
  cfg.rho_star = 1.0;
  EXPECT_THROW(spine_train(x, cfg), std::invalid_argument);
  cfg = small_training(4);
  cfg.lambda1 = -1.0;
  EXPECT_THROW(spine_train(x, cfg), std::invalid_argument);
  cfg = small_training(0);
  EXPECT_THROW(spine_train(x, cfg), std::invalid_argument);
}

TEST(SpineTransform, RangeZeroModelAndIdentity) {
  SeededRng rng(13);
  Matrix xm(20, 4);
  for (auto& v : xm.data()) v = rng.normal() * 5.0;
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back("w" + std::to_string(i));
  const EmbeddingMatrix x(words, xm);
  const auto out = spine_transform(random_model(rng, 4, 7), x);
  EXPECT_EQ(out.words(), x.words());
  for (double v : out.values().data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto silent = spine_transform(SpineModel::zeros(4, 3), x);
  for (double v : silent.values().data()) EXPECT_EQ(v, 0.0);
  const EmbeddingMatrix unit(words, uniform_matrix(rng, 20, 4, 0.0, 1.0));
  EXPECT_EQ(spine_transform(identity_model(4), unit).values(), unit.values());
  EXPECT_THROW(spine_transform(SpineModel::zeros(3, 3), x), std::invalid_argument);
}

TEST(SpineCheckpoint, RoundTrip) {
  SeededRng rng(14);
  const auto m = random_model(rng, 3, 5);
  std::stringstream io;
  write_spine_checkpoint(io, m);
  auto back = read_spine_checkpoint(io);
  auto a = blocks(const_cast<SpineModel&>(m));
  auto b = blocks(back);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) EXPECT_NEAR(a[i][j], b[i][j], 5e-11);
  }
  std::stringstream bad("spine 2 2\n1 2\n");
  EXPECT_THROW(read_spine_checkpoint(bad), DataError);
}

TEST(SpineTrace, CsvLayout) {
  std::ostringstream out;
  SpineEpoch e;
  e.epoch = 3;
  e.loss.total = 1.5;
  write_spine_trace_csv(out, {e});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,total,rl,asl,psl,mean_sparsity");
  EXPECT_NE(out.str().find("\n3,1.5"), std::string::npos);
}

#pragma once

// Capped-activation sparse autoencoder.
//
//   Z    = clamp(X W_enc^T + b_enc, 0, 1)        (batch x K)
//   Xhat = Z W_dec^T + b_dec                     (batch x L)
//
//   loss = lambda1 RL + lambda2 ASL + lambda3 PSL
//   RL   = mean_X |X - Xhat|^2
//   ASL  = sum_h max(0, rho_h - rho*)^2,  rho_h = mean_X Z_h
//   PSL  = mean_X sum_h Z_h (1 - Z_h)
//
// Gradients are derived by hand. The clamp passes gradient only where the
// pre-activation lies strictly inside (0, 1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embed_io.hpp"
#include "errors.hpp"
#include "numcore.hpp"

namespace sparsembed {

enum class SpineOptimizer { gradient_descent, adam };

struct SpineConfig {
  std::size_t hidden = 1000;
  double lambda1 = 1.0;    // reconstruction
  double lambda2 = 1.0;    // average sparsity
  double lambda3 = 0.1;    // partial sparsity
  double rho_star = 0.15;  // desired mean activation per unit
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  SpineOptimizer optimizer = SpineOptimizer::gradient_descent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // An epoch counts toward divergence when its full-data loss exceeds the
  // previous epoch's by more than this fraction (of the previous loss, or of
  // 1e-3 times the initial loss if larger); mini-batch noise stays below.
  double divergence_tolerance = 0.1;
  unsigned threads = 1;

  void validate() const {
    if (!(rho_star > 0.0 && rho_star < 1.0)) throw std::invalid_argument("spine: rho_star must lie in (0, 1)");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) throw std::invalid_argument("spine: loss weights must be >= 0");
    if (hidden == 0) throw std::invalid_argument("spine: hidden must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("spine: learning rate must be > 0");
    if (epochs == 0 || batch_size == 0) throw std::invalid_argument("spine: epochs and batch size must be positive");
    if (divergence_tolerance < 0.0) throw std::invalid_argument("spine: divergence tolerance must be >= 0");
  }
};

struct SpineModel {
  Matrix enc_weights;              // K x L
  std::vector<double> enc_bias;    // K
  Matrix dec_weights;              // L x K
  std::vector<double> dec_bias;    // L

  static SpineModel zeros(std::size_t input_dim, std::size_t hidden) {
    return {Matrix(hidden, input_dim), std::vector<double>(hidden, 0.0), Matrix(input_dim, hidden),
            std::vector<double>(input_dim, 0.0)};
  }

  std::size_t input_dim() const noexcept { return enc_weights.cols(); }
  std::size_t hidden() const noexcept { return enc_weights.rows(); }

  bool all_finite() const {
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return enc_weights.all_finite() && dec_weights.all_finite() && finite(enc_bias) && finite(dec_bias);
  }

  void check_shapes() const {
    const std::size_t k = hidden(), l = input_dim();
    if (enc_bias.size() != k || dec_weights.rows() != l || dec_weights.cols() != k || dec_bias.size() != l)
      throw std::invalid_argument("spine: inconsistent model parameter shapes");
  }

  friend bool operator==(const SpineModel&, const SpineModel&) = default;
};

/// Same layout as SpineModel; used for gradients and optimizer moments.
using SpineGradients = SpineModel;

struct SpineForward {
  Matrix pre;             // batch x K
  Matrix activations;     // batch x K (Z)
  Matrix reconstruction;  // batch x L (Xhat)
};

struct LossBreakdown {
  double total = 0.0;
  double rl = 0.0;
  double asl = 0.0;
  double psl = 0.0;
  std::vector<double> rho_hat;  // mean activation per hidden unit
};

inline double clamp_unit(double z) { return std::clamp(z, 0.0, 1.0); }

inline SpineForward spine_forward(const SpineModel& model, const Matrix& x, unsigned threads = 1) {
  model.check_shapes();
  if (x.cols() != model.input_dim())
    throw std::invalid_argument("spine_forward: input width " + std::to_string(x.cols()) + " != model input " +
                                std::to_string(model.input_dim()));
  if (!model.all_finite()) throw std::invalid_argument("spine_forward: non-finite model parameters");
  const std::size_t n = x.rows(), k_dim = model.hidden(), l_dim = model.input_dim();
  SpineForward f{Matrix(n, k_dim), Matrix(n, k_dim), Matrix(n, l_dim)};
  parallel_for(n, threads, [&](std::size_t i) {
    auto xi = x.row(i);
    auto pre = f.pre.row(i);
    auto z = f.activations.row(i);
    for (std::size_t h = 0; h < k_dim; ++h) {
      pre[h] = dot(model.enc_weights.row(h), xi) + model.enc_bias[h];
      z[h] = clamp_unit(pre[h]);
    }
    auto xh = f.reconstruction.row(i);
    for (std::size_t l = 0; l < l_dim; ++l) xh[l] = dot(model.dec_weights.row(l), z) + model.dec_bias[l];
  });
  return f;
}

namespace spine_detail {

inline LossBreakdown loss_from_forward(const Matrix& x, const SpineForward& f, const SpineConfig& cfg) {
  const std::size_t n = x.rows(), k_dim = f.activations.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossBreakdown out;
  out.rho_hat.assign(k_dim, 0.0);
  double rl = 0.0, psl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    auto xh = f.reconstruction.row(i);
    double row = 0.0;
    for (std::size_t l = 0; l < xi.size(); ++l) {
      const double d = xi[l] - xh[l];
      row += d * d;
    }
    rl += row;
    auto z = f.activations.row(i);
    double p = 0.0;
    for (std::size_t h = 0; h < k_dim; ++h) {
      out.rho_hat[h] += z[h];
      p += z[h] * (1.0 - z[h]);
    }
    psl += p;
  }
  out.rl = rl * inv_n;
  out.psl = psl * inv_n;
  double asl = 0.0;
  for (auto& rho : out.rho_hat) {
    rho *= inv_n;
    const double excess = std::max(0.0, rho - cfg.rho_star);
    asl += excess * excess;
  }
  out.asl = asl;
  out.total = cfg.lambda1 * out.rl + cfg.lambda2 * out.asl + cfg.lambda3 * out.psl;
  return out;
}

inline void check_batch(const SpineModel& model, const Matrix& batch) {
  if (batch.rows() == 0) throw std::invalid_argument("spine: empty batch");
  if (batch.cols() != model.input_dim()) throw std::invalid_argument("spine: batch width does not match model");
}

}  // namespace spine_detail

inline LossBreakdown spine_loss(const SpineModel& model, const Matrix& batch, const SpineConfig& cfg,
                                unsigned threads = 1) {
  spine_detail::check_batch(model, batch);
  return spine_detail::loss_from_forward(batch, spine_forward(model, batch, threads), cfg);
}

struct SpineLossAndGradients {
  LossBreakdown loss;
  SpineGradients gradients;
};

/// Loss and its analytic gradient with respect to all four parameter blocks.
/// Subgradient of the clamp is 0 at and outside the boundaries {0, 1}.
inline SpineLossAndGradients spine_loss_and_gradients(const SpineModel& model, const Matrix& batch,
                                                      const SpineConfig& cfg, unsigned threads = 1) {
  spine_detail::check_batch(model, batch);
  const auto f = spine_forward(model, batch, threads);
  SpineLossAndGradients out{spine_detail::loss_from_forward(batch, f, cfg),
                            SpineModel::zeros(model.input_dim(), model.hidden())};
  auto& g = out.gradients;
  const std::size_t n = batch.rows(), k_dim = model.hidden(), l_dim = model.input_dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  // dL/dZ contribution from ASL is per unit, shared by every row.
  std::vector<double> asl_pull(k_dim);
  for (std::size_t h = 0; h < k_dim; ++h)
    asl_pull[h] = cfg.lambda2 * 2.0 * std::max(0.0, out.loss.rho_hat[h] - cfg.rho_star) * inv_n;

  Matrix dxhat(n, l_dim);  // lambda1 * dRL/dXhat
  Matrix dpre(n, k_dim);   // dL/d(pre-activation)
  parallel_for(n, threads, [&](std::size_t i) {
    auto xi = batch.row(i);
    auto xh = f.reconstruction.row(i);
    auto gx = dxhat.row(i);
    for (std::size_t l = 0; l < l_dim; ++l) gx[l] = cfg.lambda1 * 2.0 * inv_n * (xh[l] - xi[l]);
    auto z = f.activations.row(i);
    auto pre = f.pre.row(i);
    auto gp = dpre.row(i);
    for (std::size_t h = 0; h < k_dim; ++h) {
      if (!(pre[h] > 0.0 && pre[h] < 1.0)) {
        gp[h] = 0.0;
        continue;
      }
      double dz = 0.0;
      for (std::size_t l = 0; l < l_dim; ++l) dz += gx[l] * model.dec_weights(l, h);
      dz += asl_pull[h];
      dz += cfg.lambda3 * inv_n * (1.0 - 2.0 * z[h]);
      gp[h] = dz;
    }
  });

  // Reductions over the batch run in row order; outputs split by parameter row.
  parallel_for(l_dim, threads, [&](std::size_t l) {
    auto gw = g.dec_weights.row(l);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gx = dxhat(i, l);
      gb += gx;
      if (gx == 0.0) continue;
      auto z = f.activations.row(i);
      for (std::size_t h = 0; h < k_dim; ++h) gw[h] += gx * z[h];
    }
    g.dec_bias[l] = gb;
  });
  parallel_for(k_dim, threads, [&](std::size_t h) {
    auto gw = g.enc_weights.row(h);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gp = dpre(i, h);
      gb += gp;
      if (gp == 0.0) continue;
      auto xi = batch.row(i);
      for (std::size_t l = 0; l < l_dim; ++l) gw[l] += gp * xi[l];
    }
    g.enc_bias[h] = gb;
  });

  if (!g.all_finite()) throw DivergenceError("spine: non-finite gradient");
  return out;
}

inline SpineGradients spine_gradients(const SpineModel& model, const Matrix& batch, const SpineConfig& cfg,
                                      unsigned threads = 1) {
  return spine_loss_and_gradients(model, batch, cfg, threads).gradients;
}

/// Per-epoch record on the full dataset. Epoch 0 is the initial model.
struct SpineEpoch {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double mean_sparsity = 0.0;  // fraction of activations <= 0.01
};

struct SpineResult {
  SpineModel model;
  std::vector<SpineEpoch> trace;
};

inline constexpr double kSpineActiveThreshold = 0.01;

namespace spine_detail {

template <typename Fn>
void for_each_param(SpineModel& a, const SpineModel& b, Fn&& fn) {
  auto apply = [&](std::span<double> x, std::span<const double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) fn(x[i], y[i], i);
  };
  apply(a.enc_weights.data(), b.enc_weights.data());
  apply(a.enc_bias, b.enc_bias);
  apply(a.dec_weights.data(), b.dec_weights.data());
  apply(a.dec_bias, b.dec_bias);
}

inline SpineEpoch evaluate_epoch(const SpineModel& model, const Matrix& x, const SpineConfig& cfg, std::size_t epoch) {
  const auto f = spine_forward(model, x, cfg.threads);
  SpineEpoch e{epoch, loss_from_forward(x, f, cfg), 0.0};
  std::size_t quiet = 0;
  for (double z : f.activations.data())
    if (z <= kSpineActiveThreshold) ++quiet;
  e.mean_sparsity = static_cast<double>(quiet) / static_cast<double>(f.activations.size());
  return e;
}

}  // namespace spine_detail

/// Mini-batch training. Encoder weights start uniform in (-1, 1) / sqrt(L),
/// decoder weights uniform in (-1, 1) / sqrt(K), biases at zero; batch order
/// is reshuffled every epoch from a seeded substream. Throws DivergenceError
/// when the full-data loss grows (beyond divergence_tolerance, relative to the
/// larger of the previous loss and 1e-3 of the initial loss) three epochs in a
/// row or turns non-finite.
inline constexpr double kSpineGrowthFloor = 1e-3;

inline SpineResult spine_train(const Matrix& x, const SpineConfig& cfg) {
  cfg.validate();
  const std::size_t v_dim = x.rows(), l_dim = x.cols(), k_dim = cfg.hidden;
  if (v_dim == 0 || l_dim == 0) throw std::invalid_argument("spine: empty input");
  if (cfg.batch_size > v_dim)
    throw std::invalid_argument("spine: batch size " + std::to_string(cfg.batch_size) + " exceeds vocabulary size " +
                                std::to_string(v_dim));

  const SeededRng root(cfg.seed);
  SeededRng init_rng = root.substream(0);
  SeededRng order_rng = root.substream(1);

  SpineModel model = SpineModel::zeros(l_dim, k_dim);
  const double enc_scale = 1.0 / std::sqrt(static_cast<double>(l_dim));
  const double dec_scale = 1.0 / std::sqrt(static_cast<double>(k_dim));
  for (double& w : model.enc_weights.data()) w = init_rng.uniform(-1.0, 1.0) * enc_scale;
  for (double& w : model.dec_weights.data()) w = init_rng.uniform(-1.0, 1.0) * dec_scale;

  SpineModel m1 = SpineModel::zeros(l_dim, k_dim), m2 = SpineModel::zeros(l_dim, k_dim);
  std::size_t adam_t = 0;

  SpineResult result;
  result.trace.push_back(spine_detail::evaluate_epoch(model, x, cfg, 0));
  int growth_streak = 0;

  Matrix batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = seeded_shuffle(iota_indices(v_dim), order_rng);
    for (std::size_t start = 0; start < v_dim; start += cfg.batch_size) {
      const std::size_t rows = std::min(cfg.batch_size, v_dim - start);
      batch = Matrix(rows, l_dim);
      for (std::size_t r = 0; r < rows; ++r) {
        auto src = x.row(order[start + r]);
        std::copy(src.begin(), src.end(), batch.row(r).begin());
      }
      const auto grads = spine_gradients(model, batch, cfg, cfg.threads);
      if (cfg.optimizer == SpineOptimizer::gradient_descent) {
        spine_detail::for_each_param(model, grads,
                                     [&](double& p, double g, std::size_t) { p -= cfg.learning_rate * g; });
      } else {
        ++adam_t;
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
        spine_detail::for_each_param(m1, grads, [&](double& m, double g, std::size_t) {
          m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        });
        spine_detail::for_each_param(m2, grads, [&](double& v, double g, std::size_t) {
          v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
        });
        // model -= lr * mhat / (sqrt(vhat) + eps), walked block by block
        auto step = [&](std::span<double> p, std::span<const double> m, std::span<const double> v) {
          for (std::size_t i = 0; i < p.size(); ++i)
            p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_epsilon);
        };
        step(model.enc_weights.data(), m1.enc_weights.data(), m2.enc_weights.data());
        step(model.enc_bias, m1.enc_bias, m2.enc_bias);
        step(model.dec_weights.data(), m1.dec_weights.data(), m2.dec_weights.data());
        step(model.dec_bias, m1.dec_bias, m2.dec_bias);
      }
    }
    if (!model.all_finite()) throw DivergenceError("spine: non-finite parameters at epoch " + std::to_string(epoch));
    result.trace.push_back(spine_detail::evaluate_epoch(model, x, cfg, epoch));
    const double total = result.trace.back().loss.total;
    if (!std::isfinite(total)) throw DivergenceError("spine: loss became non-finite at epoch " + std::to_string(epoch));
    const double previous = result.trace[result.trace.size() - 2].loss.total;
    // Growth is measured against a floor tied to the starting loss so that
    // optimizer jitter near a zero-loss optimum is not read as divergence.
    const double scale = std::max(previous, kSpineGrowthFloor * result.trace.front().loss.total);
    growth_streak = total > previous + cfg.divergence_tolerance * scale ? growth_streak + 1 : 0;
    if (growth_streak >= 3)
      throw DivergenceError("spine: loss grew for 3 consecutive epochs (epoch " + std::to_string(epoch) +
                            ", loss " + format_real(total) + "); lower the learning rate");
  }
  result.model = std::move(model);
  return result;
}

inline SpineResult spine_train(const EmbeddingMatrix& x, const SpineConfig& cfg) { return spine_train(x.values(), cfg); }

/// Hidden activations as an embedding over the same vocabulary; entries lie
/// in [0, 1].
inline EmbeddingMatrix spine_transform(const SpineModel& model, const EmbeddingMatrix& x, unsigned threads = 1) {
  if (x.dim() != model.input_dim())
    throw std::invalid_argument("spine_transform: embedding dimension " + std::to_string(x.dim()) +
                                " != model input " + std::to_string(model.input_dim()));
  auto f = spine_forward(model, x.values(), threads);
  return EmbeddingMatrix(x.words(), std::move(f.activations));
}

/// Checkpoint: "spine L K" line followed by enc_weights (K rows), enc_bias
/// (1 row), dec_weights (L rows), dec_bias (1 row); each row is
/// space-separated values.
inline void write_spine_checkpoint(std::ostream& out, const SpineModel& m, int precision = 10) {
  std::string buf = "spine " + std::to_string(m.input_dim()) + " " + std::to_string(m.hidden()) + "\n";
  auto row = [&](std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) buf.push_back(' ');
      io_detail::append_fixed(buf, v[i], precision);
    }
    buf.push_back('\n');
  };
  for (std::size_t h = 0; h < m.hidden(); ++h) row(m.enc_weights.row(h));
  row(m.enc_bias);
  for (std::size_t l = 0; l < m.input_dim(); ++l) row(m.dec_weights.row(l));
  row(m.dec_bias);
  out << buf;
}

inline SpineModel read_spine_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!io_detail::read_line(in, line, line_no)) throw DataError("empty spine checkpoint");
  const auto head = io_detail::split_fields(line);
  if (head.size() != 3 || head[0] != "spine") throw DataError("bad spine checkpoint header", line_no);
  const auto l_dim = io_detail::parse_count(head[1]);
  const auto k_dim = io_detail::parse_count(head[2]);
  if (!l_dim || !k_dim || *l_dim == 0 || *k_dim == 0) throw DataError("bad spine checkpoint header", line_no);
  SpineModel m = SpineModel::zeros(*l_dim, *k_dim);
  auto read_row = [&](std::span<double> dst) {
    if (!io_detail::read_line(in, line, line_no)) throw DataError("truncated spine checkpoint");
    const auto f = io_detail::split_fields(line);
    if (f.size() != dst.size()) throw DataError("wrong number of values in spine checkpoint row", line_no);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto v = io_detail::parse_real(f[i]);
      if (!v) throw DataError("non-numeric value in spine checkpoint", line_no);
      dst[i] = *v;
    }
  };
  for (std::size_t h = 0; h < *k_dim; ++h) read_row(m.enc_weights.row(h));
  read_row(m.enc_bias);
  for (std::size_t l = 0; l < *l_dim; ++l) read_row(m.dec_weights.row(l));
  read_row(m.dec_bias);
  return m;
}

inline void write_spine_trace_csv(std::ostream& out, const std::vector<SpineEpoch>& trace) {
  std::string buf = "epoch,total,rl,asl,psl,mean_sparsity\n";
  for (const auto& e : trace) {
    buf += std::to_string(e.epoch);
    for (double v : {e.loss.total, e.loss.rl, e.loss.asl, e.loss.psl, e.mean_sparsity}) {
      buf.push_back(',');
      io_detail::append_fixed(buf, v, 10);
    }
    buf.push_back('\n');
  }
  out << buf;
}

}  // namespace sparsembed

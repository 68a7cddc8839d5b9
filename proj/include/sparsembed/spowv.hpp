#pragma once

// Sparse overcomplete word vectors by dictionary learning.
//
// Minimizes over dictionary D (K x L) and codes A (V x K):
//
//   sum_i |X_i - a_i D|^2 + lambda |a_i|_1   +   tau |D|_F^2
//
// The ridge term on D is counted once, not once per row. Training alternates
// a full proximal-gradient (ISTA) pass over all rows with one gradient step
// on D. Codes are unconstrained in sign.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "embed_io.hpp"
#include "errors.hpp"
#include "numcore.hpp"

namespace sparsembed {

struct SpowvConfig {
  std::size_t dim = 1000;                 // K, must exceed the input dimension
  double lambda = 0.5;                    // l1 weight on codes
  double tau = 1e-5;                      // ridge weight on the dictionary (global)
  std::size_t ista_steps = 50;            // proximal steps per row per epoch
  std::optional<double> ista_step_size;   // nullopt: 1 / (2 sigma_max(D D^T))
  double dict_learning_rate = 0.05;
  std::size_t epochs = 50;
  std::uint64_t seed = 42;
  double init_scale = 0.5;                // D starts uniform in (-init_scale, init_scale)
  unsigned threads = 1;

  void validate(std::size_t input_dim) const {
    if (dim <= input_dim)
      throw std::invalid_argument("spowv: target dimension " + std::to_string(dim) +
                                  " must exceed input dimension " + std::to_string(input_dim));
    if (lambda < 0.0 || tau < 0.0) throw std::invalid_argument("spowv: lambda and tau must be >= 0");
    if (ista_steps == 0 || epochs == 0) throw std::invalid_argument("spowv: steps and epochs must be positive");
    if (ista_step_size && !(*ista_step_size > 0.0)) throw std::invalid_argument("spowv: step size must be > 0");
    if (!(dict_learning_rate > 0.0) || !(init_scale > 0.0))
      throw std::invalid_argument("spowv: rates and scales must be > 0");
  }
};

struct Dictionary {
  Matrix bases;  // K x L
};

struct SparseCodes {
  Matrix codes;  // V x K

  /// Fraction of entries with |a| < eps.
  double sparsity(double eps = kZeroEps) const {
    if (codes.empty()) return 0.0;
    std::size_t zeros = 0;
    for (double v : codes.data())
      if (std::abs(v) < eps) ++zeros;
    return static_cast<double>(zeros) / static_cast<double>(codes.size());
  }
};

struct SpowvEpoch {
  std::size_t epoch = 0;
  double objective = 0.0;
  double sparsity = 0.0;
};

struct SpowvResult {
  Dictionary dictionary;
  SparseCodes codes;
  std::vector<SpowvEpoch> trace;
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

namespace spowv_detail {

/// r = x - a D
inline void residual(std::span<const double> x, const Matrix& d, std::span<const double> a, std::span<double> r) {
  std::copy(x.begin(), x.end(), r.begin());
  for (std::size_t k = 0; k < d.rows(); ++k) {
    if (a[k] == 0.0) continue;
    auto dk = d.row(k);
    for (std::size_t l = 0; l < r.size(); ++l) r[l] -= a[k] * dk[l];
  }
}

inline double l1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

/// ISTA on one row starting from `a` (updated in place). If a step would
/// raise the row objective, the step is halved until it does not (the
/// power-iteration Lipschitz estimate can fall short of the true bound).
inline void ista(std::span<const double> x, const Matrix& d, double lambda, double step, std::size_t steps,
                 std::span<double> a) {
  const std::size_t k_dim = d.rows();
  const std::size_t l_dim = d.cols();
  std::vector<double> r(l_dim), r_next(l_dim), a_next(k_dim);
  residual(x, d, a, r);
  double f = squared_norm(r) + lambda * l1(a);
  for (std::size_t it = 0; it < steps; ++it) {
    for (int attempt = 0;; ++attempt) {
      for (std::size_t k = 0; k < k_dim; ++k) {
        // gradient of |x - aD|^2 wrt a_k is -2 <r, D_k>
        const double z = a[k] + step * 2.0 * dot(r, d.row(k));
        a_next[k] = soft_threshold(z, lambda * step);
      }
      residual(x, d, a_next, r_next);
      const double f_next = squared_norm(r_next) + lambda * l1(a_next);
      if (!std::isfinite(f_next)) throw DivergenceError("spowv: non-finite value in sparse coding");
      if (f_next <= f || attempt >= 60) {
        if (f_next <= f) {
          std::copy(a_next.begin(), a_next.end(), a.begin());
          r.swap(r_next);
          f = f_next;
        }
        break;
      }
      step *= 0.5;
    }
  }
}

/// |X - A D|^2 + tau |D|^2 (the D-subproblem objective).
inline double dictionary_objective(const Matrix& x, const Matrix& a, const Matrix& d, double tau) {
  std::vector<double> r(x.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    residual(x.row(i), d, a.row(i), r);
    s += squared_norm(r);
  }
  return s + tau * frobenius_squared(d);
}

inline void check_shapes(const Matrix& x, const Matrix& d, const Matrix& a) {
  if (d.cols() != x.cols() || a.rows() != x.rows() || a.cols() != d.rows())
    throw std::invalid_argument("spowv: shape mismatch (X " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + ", D " + std::to_string(d.rows()) + "x" +
                                std::to_string(d.cols()) + ", A " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ")");
}

}  // namespace spowv_detail

inline double spowv_objective(const Matrix& x, const Dictionary& d, const SparseCodes& a, const SpowvConfig& cfg) {
  spowv_detail::check_shapes(x, d.bases, a.codes);
  std::vector<double> r(x.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    spowv_detail::residual(x.row(i), d.bases, a.codes.row(i), r);
    s += squared_norm(r) + cfg.lambda * spowv_detail::l1(a.codes.row(i));
  }
  return s + cfg.tau * frobenius_squared(d.bases);
}

/// Step size for ISTA: the configured one, or 1 / (2 sigma_max(D D^T)) with
/// sigma_max estimated by 20 power-iteration steps on D^T D.
inline double ista_step(const Dictionary& d, const SpowvConfig& cfg) {
  if (cfg.ista_step_size) return *cfg.ista_step_size;
  const double sigma = power_iteration(matmul(transpose(d.bases), d.bases), 20);
  if (!(sigma > 0.0)) return 1.0;  // D == 0: gradient vanishes, any step is exact
  return 1.0 / (2.0 * sigma);
}

/// cfg.ista_steps proximal-gradient iterations on one row's lasso problem.
inline std::vector<double> sparse_code_step(std::span<const double> x_row, const Dictionary& d,
                                            const SpowvConfig& cfg, std::span<const double> a_init) {
  if (x_row.size() != d.bases.cols() || a_init.size() != d.bases.rows())
    throw std::invalid_argument("sparse_code_step: shape mismatch");
  std::vector<double> a(a_init.begin(), a_init.end());
  spowv_detail::ista(x_row, d.bases, cfg.lambda, ista_step(d, cfg), cfg.ista_steps, a);
  return a;
}

/// One gradient step on |X - A D|^2 + tau |D|^2 with cfg.dict_learning_rate.
inline Dictionary dictionary_update(const Matrix& x, const SparseCodes& a, const Dictionary& d, const SpowvConfig& cfg,
                                    std::optional<double> rate_override = std::nullopt) {
  spowv_detail::check_shapes(x, d.bases, a.codes);
  const double rate = rate_override.value_or(cfg.dict_learning_rate);
  const std::size_t v_dim = x.rows(), k_dim = d.bases.rows(), l_dim = d.bases.cols();

  Matrix residuals(v_dim, l_dim);
  parallel_for(v_dim, cfg.threads, [&](std::size_t i) {
    spowv_detail::residual(x.row(i), d.bases, a.codes.row(i), residuals.row(i));
  });

  Matrix next = d.bases;
  // grad_k = -2 sum_i a_ik r_i + 2 tau D_k ; rows of D are independent
  parallel_for(k_dim, cfg.threads, [&](std::size_t k) {
    std::vector<double> g(l_dim, 0.0);
    for (std::size_t i = 0; i < v_dim; ++i) {
      const double aik = a.codes(i, k);
      if (aik == 0.0) continue;
      auto ri = residuals.row(i);
      for (std::size_t l = 0; l < l_dim; ++l) g[l] += aik * ri[l];
    }
    auto out = next.row(k);
    for (std::size_t l = 0; l < l_dim; ++l) out[l] -= rate * (-2.0 * g[l] + 2.0 * cfg.tau * d.bases(k, l));
  });
  if (!next.all_finite()) throw DivergenceError("spowv: non-finite dictionary after update");
  return {std::move(next)};
}

/// Reconstruction mean squared error |X - A D|^2 / (V L).
inline double reconstruction_mse(const Matrix& x, const Dictionary& d, const SparseCodes& a) {
  spowv_detail::check_shapes(x, d.bases, a.codes);
  return spowv_detail::dictionary_objective(x, a.codes, d.bases, 0.0) / static_cast<double>(x.size());
}

/// Alternating minimization. D starts uniform in (-init_scale, init_scale)
/// from the seed; A starts at zero and is warm-started between epochs. The
/// dictionary step is halved whenever it would raise the D-subproblem
/// objective, so the recorded objective never increases. Aborts with
/// DivergenceError if the objective grows three epochs in a row or becomes
/// non-finite.
inline SpowvResult spowv_fit(const Matrix& x, const SpowvConfig& cfg) {
  if (x.rows() == 0) throw std::invalid_argument("spowv: empty input");
  cfg.validate(x.cols());
  const std::size_t v_dim = x.rows(), l_dim = x.cols(), k_dim = cfg.dim;

  SeededRng rng = SeededRng(cfg.seed).substream(0);
  Dictionary d{Matrix(k_dim, l_dim)};
  for (double& v : d.bases.data()) v = rng.uniform(-cfg.init_scale, cfg.init_scale);
  SparseCodes a{Matrix(v_dim, k_dim)};

  SpowvResult result;
  double rate = cfg.dict_learning_rate;
  double previous = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double step = ista_step(d, cfg);
    parallel_for(v_dim, cfg.threads, [&](std::size_t i) {
      spowv_detail::ista(x.row(i), d.bases, cfg.lambda, step, cfg.ista_steps, a.codes.row(i));
    });

    const double before = spowv_detail::dictionary_objective(x, a.codes, d.bases, cfg.tau);
    for (int attempt = 0; attempt < 60; ++attempt) {
      Dictionary candidate = dictionary_update(x, a, d, cfg, rate);
      if (spowv_detail::dictionary_objective(x, a.codes, candidate.bases, cfg.tau) <= before) {
        d = std::move(candidate);
        break;
      }
      rate *= 0.5;
    }

    const double objective = spowv_objective(x, d, a, cfg);
    if (!std::isfinite(objective)) throw DivergenceError("spowv: objective became non-finite at epoch " +
                                                         std::to_string(epoch));
    growth_streak = objective > previous ? growth_streak + 1 : 0;
    if (growth_streak >= 3)
      throw DivergenceError("spowv: objective grew for 3 consecutive epochs (epoch " + std::to_string(epoch) +
                            ", objective " + format_real(objective) + ")");
    previous = objective;
    result.trace.push_back({epoch, objective, a.sparsity()});
  }
  result.dictionary = std::move(d);
  result.codes = std::move(a);
  return result;
}

inline SpowvResult spowv_fit(const EmbeddingMatrix& x, const SpowvConfig& cfg) { return spowv_fit(x.values(), cfg); }

/// Codes as a queryable embedding over the input vocabulary.
inline EmbeddingMatrix spowv_embedding(const EmbeddingMatrix& x, const SparseCodes& a) {
  if (a.codes.rows() != x.size()) throw std::invalid_argument("spowv_embedding: row count mismatch");
  return EmbeddingMatrix(x.words(), a.codes);
}

/// Checkpoint: "spowv V L K lambda tau epoch" line, then D as an embedding
/// block (tokens basis_0..basis_{K-1}) and A as an embedding block over the
/// input vocabulary.
inline void write_spowv_checkpoint(std::ostream& out, const EmbeddingMatrix& x, const SpowvResult& r,
                                   const SpowvConfig& cfg, int precision = 10) {
  const std::size_t epoch = r.trace.empty() ? 0 : r.trace.back().epoch;
  std::string head = "spowv " + std::to_string(x.size()) + " " + std::to_string(x.dim()) + " " +
                     std::to_string(r.dictionary.bases.rows()) + " ";
  io_detail::append_fixed(head, cfg.lambda, 10);
  head += " ";
  io_detail::append_fixed(head, cfg.tau, 10);
  head += " " + std::to_string(epoch) + "\n";
  out << head;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < r.dictionary.bases.rows(); ++k) names.push_back("basis_" + std::to_string(k));
  write_embeddings(out, EmbeddingMatrix(std::move(names), r.dictionary.bases), precision);
  write_embeddings(out, spowv_embedding(x, r.codes), precision);
}

struct SpowvCheckpoint {
  std::size_t vocab = 0, input_dim = 0, dim = 0, epoch = 0;
  double lambda = 0.0, tau = 0.0;
  Dictionary dictionary;
  EmbeddingMatrix codes;
};

inline SpowvCheckpoint read_spowv_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!io_detail::read_line(in, line, line_no)) throw DataError("empty checkpoint");
  const auto f = io_detail::split_fields(line);
  if (f.size() != 7 || f[0] != "spowv") throw DataError("bad checkpoint header", 1);
  auto count = [&](std::string_view s) {
    auto v = io_detail::parse_count(s);
    if (!v) throw DataError("bad checkpoint header", 1);
    return *v;
  };
  auto real = [&](std::string_view s) {
    auto v = io_detail::parse_real(s);
    if (!v) throw DataError("bad checkpoint header", 1);
    return *v;
  };
  const std::size_t v_dim = count(f[1]), l_dim = count(f[2]), k_dim = count(f[3]), epoch = count(f[6]);
  const double lambda = real(f[4]), tau = real(f[5]);
  auto read_block = [&](std::size_t rows) {
    std::string block;
    for (std::size_t i = 0; i <= rows; ++i) {
      if (!io_detail::read_line(in, line, line_no)) throw DataError("truncated checkpoint");
      block += line;
      block += '\n';
    }
    std::istringstream ss(block);
    return parse_dense_embeddings(ss);
  };
  EmbeddingMatrix d = read_block(k_dim);
  EmbeddingMatrix a = read_block(v_dim);
  if (d.dim() != l_dim || a.dim() != k_dim) throw DataError("checkpoint block shapes disagree with header");
  return {v_dim, l_dim, k_dim, epoch, lambda, tau, Dictionary{d.values()}, std::move(a)};
}

inline void write_spowv_trace_csv(std::ostream& out, const std::vector<SpowvEpoch>& trace) {
  std::string buf = "epoch,objective,sparsity\n";
  for (const auto& e : trace) {
    buf += std::to_string(e.epoch) + ",";
    io_detail::append_fixed(buf, e.objective, 10);
    buf += ",";
    io_detail::append_fixed(buf, e.sparsity, 6);
    buf += "\n";
  }
  out << buf;
}

}  // namespace sparsembed

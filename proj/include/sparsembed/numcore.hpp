#pragma once

// Dense matrices, a portable seeded RNG, ranking and similarity primitives.
//
// Every reduction here runs left to right in index order. Parallel helpers
// only split work whose outputs are independent, so results never depend on
// the thread count.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace sparsembed {

/// Values with magnitude below this count as zero in sparsity statistics
/// and heatmap sign classification.
inline constexpr double kZeroEps = 1e-8;

/// Shortest round-trip text for a double, for diagnostics.
inline std::string format_real(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: data size does not match shape");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

/// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double frobenius_squared(const Matrix& m) { return squared_norm(m.data()); }

/// Largest eigenvalue of the symmetric PSD matrix `m` by power iteration from
/// a fixed all-ones start. Underestimates when not converged.
inline double power_iteration(const Matrix& m, std::size_t steps) {
  const std::size_t n = m.rows();
  if (n == 0) return 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(n);
  double estimate = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) w[i] = dot(m.row(i), v);
    const double norm = std::sqrt(squared_norm(w));
    if (norm == 0.0) return 0.0;
    estimate = dot(v, w);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  for (std::size_t i = 0; i < n; ++i) w[i] = dot(m.row(i), v);
  return std::max(estimate, dot(v, w));
}

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seeded generator with a portable output stream. Distributions are derived
/// from raw 64-bit draws here rather than through <random> distributions,
/// whose algorithms differ between standard libraries.
///
/// Substreams: substream(id) seeds a fresh engine with
/// splitmix64(seed ^ splitmix64(id)), so workers get independent streams that
/// depend only on (seed, id).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 42) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  SeededRng substream(std::uint64_t id) const { return SeededRng(seed_ ^ splitmix64(id)); }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: empty range");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Fisher-Yates, walking from the back.
template <typename T>
std::vector<T> seeded_shuffle(std::vector<T> items, SeededRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
  return items;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// ---------------------------------------------------------------------------
// Parallelism

/// Runs fn(i) for i in [0, n) on up to `threads` workers in contiguous blocks.
/// fn must only write state owned by index i. The first exception (lowest
/// block) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Similarity and ranking

/// dot(v, w) / (|v| |w|), clamped to [-1, 1]. Throws std::domain_error when
/// either vector has zero norm.
inline double cosine_similarity(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  const double nv = squared_norm(v);
  const double nw = squared_norm(w);
  if (nv == 0.0 || nw == 0.0) throw std::domain_error("cosine_similarity: zero-norm vector");
  return std::clamp(dot(v, w) / (std::sqrt(nv) * std::sqrt(nw)), -1.0, 1.0);
}

/// Fractional ranks 1..n; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  auto order = iota_indices(n);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    // positions i..j-1 (0-based) -> ranks i+1..j
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

inline double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("correlation: need at least 2 observations");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pearson correlation of average-tie ranks.
inline double spearman_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least 2 observations");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson_correlation(rx, ry);
}

}  // namespace sparsembed

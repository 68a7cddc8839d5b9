#pragma once

// Sentence classification harness: mean-of-word-vectors features, a
// multinomial logistic regression trained by full-batch gradient descent,
// and seeded k-fold cross-validation. Features are consumed raw (no
// standardization) so different embedding spaces are compared as-is.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embed_io.hpp"
#include "errors.hpp"
#include "numcore.hpp"

namespace sparsembed {

struct SentenceFeatures {
  std::vector<double> values;
  bool all_oov = false;
};

/// Mean of the in-vocabulary token vectors; zero vector with all_oov set when
/// no token is known.
inline SentenceFeatures featurize_sentence(const EmbeddingMatrix& emb, std::span<const std::string> tokens) {
  SentenceFeatures f{std::vector<double>(emb.dim(), 0.0), false};
  std::size_t known = 0;
  for (const auto& t : tokens) {
    const auto i = emb.find(t);
    if (!i) continue;
    const auto row = emb.row(*i);
    for (std::size_t d = 0; d < row.size(); ++d) f.values[d] += row[d];
    ++known;
  }
  if (known == 0) {
    f.all_oov = true;
    return f;
  }
  for (double& v : f.values) v /= static_cast<double>(known);
  return f;
}

struct ClassifierConfig {
  double l2 = 1e-4;
  double learning_rate = 1.0;  // capped at 1 / (curvature bound), see train_classifier
  std::size_t epochs = 300;
  std::uint64_t seed = 42;     // recorded for reports; zero init makes training seed-free
};

struct ClassifierModel {
  Matrix weights;                   // classes x features
  std::vector<double> bias;         // classes
  std::vector<std::string> labels;  // row order of weights
};

namespace extrinsic_detail {

inline void class_scores(const ClassifierModel& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t c = 0; c < m.labels.size(); ++c) out[c] = dot(m.weights.row(c), x) + m.bias[c];
}

inline void softmax_inplace(std::span<double> s) {
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : s) v /= z;
}

}  // namespace extrinsic_detail

struct ClassifierLossAndGradient {
  double loss = 0.0;
  Matrix weight_grad;
  std::vector<double> bias_grad;
};

/// Mean cross-entropy + (l2 / 2) |W|^2 and its gradient. `targets` index into
/// model.labels.
inline ClassifierLossAndGradient classifier_loss_and_gradient(const ClassifierModel& m, const Matrix& features,
                                                              std::span<const std::size_t> targets, double l2) {
  const std::size_t n = features.rows(), classes = m.labels.size(), f_dim = features.cols();
  ClassifierLossAndGradient out{0.0, Matrix(classes, f_dim), std::vector<double>(classes, 0.0)};
  std::vector<double> p(classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    extrinsic_detail::class_scores(m, x, p);
    const double mx = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double v : p) z += std::exp(v - mx);
    out.loss += (std::log(z) + mx - p[targets[i]]) * inv_n;
    extrinsic_detail::softmax_inplace(p);
    for (std::size_t c = 0; c < classes; ++c) {
      const double g = (p[c] - (c == targets[i] ? 1.0 : 0.0)) * inv_n;
      out.bias_grad[c] += g;
      auto gw = out.weight_grad.row(c);
      for (std::size_t d = 0; d < f_dim; ++d) gw[d] += g * x[d];
    }
  }
  out.loss += 0.5 * l2 * frobenius_squared(m.weights);
  for (std::size_t c = 0; c < classes; ++c) {
    auto gw = out.weight_grad.row(c);
    for (std::size_t d = 0; d < f_dim; ++d) gw[d] += l2 * m.weights(c, d);
  }
  return out;
}

/// Full-batch gradient descent from zero weights. The step is
/// min(cfg.learning_rate, 1 / (0.5 max_i(|x_i|^2 + 1) + l2)), the inverse of
/// a curvature bound on the objective, so the training loss never increases.
/// Labels are ordered lexicographically.
inline ClassifierModel train_classifier(const Matrix& features, std::span<const std::string> labels,
                                        const ClassifierConfig& cfg = {}) {
  if (features.rows() != labels.size()) throw std::invalid_argument("train_classifier: one label per row required");
  std::map<std::string, std::size_t> label_index;
  for (const auto& l : labels) label_index.emplace(l, 0);
  if (label_index.size() < 2) throw DataError("train_classifier: fewer than 2 classes in the training data");
  if (features.rows() < label_index.size()) throw DataError("train_classifier: fewer samples than classes");
  if (!features.all_finite()) throw DataError("train_classifier: non-finite features");

  ClassifierModel m;
  for (auto& [l, idx] : label_index) {
    idx = m.labels.size();
    m.labels.push_back(l);
  }
  const std::size_t classes = m.labels.size(), f_dim = features.cols();
  m.weights = Matrix(classes, f_dim);
  m.bias.assign(classes, 0.0);
  std::vector<std::size_t> targets;
  targets.reserve(labels.size());
  for (const auto& l : labels) targets.push_back(label_index.at(l));

  double max_sq = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) max_sq = std::max(max_sq, squared_norm(features.row(i)) + 1.0);
  const double rate = std::min(cfg.learning_rate, 1.0 / (0.5 * max_sq + cfg.l2));

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto lg = classifier_loss_and_gradient(m, features, targets, cfg.l2);
    if (!std::isfinite(lg.loss)) throw DivergenceError("classifier: non-finite training loss");
    if (lg.loss > previous + 1e-12 * std::max(1.0, std::abs(previous)))
      throw DivergenceError("classifier: training loss increased at epoch " + std::to_string(epoch));
    previous = lg.loss;
    for (std::size_t c = 0; c < classes; ++c) {
      m.bias[c] -= rate * lg.bias_grad[c];
      auto w = m.weights.row(c);
      auto g = lg.weight_grad.row(c);
      for (std::size_t d = 0; d < f_dim; ++d) w[d] -= rate * g[d];
    }
  }
  return m;
}

/// Argmax class score per row; ties go to the earlier label.
inline std::vector<std::string> predict(const ClassifierModel& m, const Matrix& features) {
  if (features.cols() != m.weights.cols())
    throw std::invalid_argument("predict: feature width " + std::to_string(features.cols()) + " != model width " +
                                std::to_string(m.weights.cols()));
  std::vector<std::string> out;
  out.reserve(features.rows());
  std::vector<double> s(m.labels.size());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    extrinsic_detail::class_scores(m, features.row(i), s);
    const auto best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    out.push_back(m.labels[best]);
  }
  return out;
}

struct CvReport {
  std::vector<double> fold_accuracies;
  std::vector<std::size_t> fold_sizes;
  double mean_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::size_t all_oov_sentences = 0;
};

/// Sizes of k near-equal folds over n samples; the first n % k folds hold
/// one extra sample.
inline std::vector<std::size_t> fold_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t f = 0; f < n % k; ++f) ++sizes[f];
  return sizes;
}

/// Seeded shuffle, k near-equal contiguous folds over the shuffled order,
/// train on k-1 folds and test on the held-out one. Folds may run in
/// parallel; accuracies are collected in fold order.
inline CvReport cross_validate(const EmbeddingMatrix& emb, const LabeledCorpus& corpus, std::size_t k = 10,
                               std::uint64_t seed = 42, const ClassifierConfig& cfg = {}, unsigned threads = 1) {
  const std::size_t n = corpus.samples.size();
  if (k < 2) throw std::invalid_argument("cross_validate: k must be >= 2");
  if (n < k) throw DataError("cross_validate: corpus of " + std::to_string(n) + " samples is smaller than k = " +
                             std::to_string(k));

  CvReport report;
  report.seed = seed;
  Matrix features(n, emb.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto f = featurize_sentence(emb, corpus.samples[i].tokens);
    if (f.all_oov) ++report.all_oov_sentences;
    std::copy(f.values.begin(), f.values.end(), features.row(i).begin());
  }

  SeededRng rng(seed);
  const auto order = seeded_shuffle(iota_indices(n), rng);
  report.fold_sizes = fold_sizes(n, k);
  std::vector<std::size_t> fold_start(k + 1, 0);
  for (std::size_t f = 0; f < k; ++f) fold_start[f + 1] = fold_start[f] + report.fold_sizes[f];

  report.fold_accuracies.assign(k, 0.0);
  parallel_for(k, threads, [&](std::size_t f) {
    const std::size_t test_rows = report.fold_sizes[f];
    Matrix train_x(n - test_rows, emb.dim()), test_x(test_rows, emb.dim());
    std::vector<std::string> train_y, test_y;
    std::size_t tr = 0, te = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t i = order[pos];
      const bool held_out = pos >= fold_start[f] && pos < fold_start[f + 1];
      auto src = features.row(i);
      auto dst = held_out ? test_x.row(te++) : train_x.row(tr++);
      std::copy(src.begin(), src.end(), dst.begin());
      (held_out ? test_y : train_y).push_back(corpus.samples[i].label);
    }
    const auto model = train_classifier(train_x, train_y, cfg);
    const auto pred = predict(model, test_x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == test_y[i]) ++correct;
    report.fold_accuracies[f] = static_cast<double>(correct) / static_cast<double>(test_rows);
  });
  double sum = 0.0;
  for (double a : report.fold_accuracies) sum += a;
  report.mean_accuracy = sum / static_cast<double>(k);
  return report;
}

/// Rows are embedding variants, columns are tasks plus their average;
/// accuracies in percent.
inline void write_extrinsic_csv(std::ostream& out, std::span<const std::string> variants,
                                std::span<const std::string> tasks,
                                const std::vector<std::vector<double>>& mean_accuracy) {
  std::string buf = "embedding";
  for (const auto& t : tasks) buf += "," + t;
  buf += ",Average\n";
  for (std::size_t v = 0; v < variants.size(); ++v) {
    buf += variants[v];
    double sum = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      buf.push_back(',');
      io_detail::append_fixed(buf, 100.0 * mean_accuracy[v][t], 2);
      sum += mean_accuracy[v][t];
    }
    buf.push_back(',');
    io_detail::append_fixed(buf, tasks.empty() ? 0.0 : 100.0 * sum / static_cast<double>(tasks.size()), 2);
    buf.push_back('\n');
  }
  out << buf;
}

}  // namespace sparsembed

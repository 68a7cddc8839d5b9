#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <sparsembed/eval_extrinsic.hpp>

using namespace sparsembed;

namespace {

EmbeddingMatrix tiny_embedding() {
  return EmbeddingMatrix({"a", "b", "c"}, Matrix(3, 2, {1.0, 0.0, 0.0, 2.0, -1.0, 4.0}));
}

// Two Gaussian blobs in 3-d, one per class, far enough apart to separate.
LabeledCorpus blob_corpus(std::size_t n, double gap, std::uint64_t seed, EmbeddingMatrix& emb) {
  SeededRng rng(seed);
  std::vector<std::string> words;
  Matrix values(n, 3);
  LabeledCorpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    const double side = i % 2 == 0 ? 1.0 : -1.0;
    words.push_back("w" + std::to_string(i));
    for (std::size_t d = 0; d < 3; ++d) values(i, d) = rng.normal() * 0.5;
    values(i, 0) += side * gap;
    corpus.samples.push_back({{words.back()}, side > 0 ? "pos" : "neg"});
  }
  corpus.label_set = {"neg", "pos"};
  emb = EmbeddingMatrix(std::move(words), std::move(values));
  return corpus;
}

}  // namespace

TEST(Featurize, MeanOfKnownTokens) {
  const auto emb = tiny_embedding();
  const std::vector<std::string> tokens{"a", "zzz", "b"};
  const auto f = featurize_sentence(emb, tokens);
  EXPECT_FALSE(f.all_oov);
  EXPECT_EQ(f.values, (std::vector<double>{0.5, 1.0}));
  const std::vector<std::string> repeated{"c", "c"};
  EXPECT_EQ(featurize_sentence(emb, repeated).values, (std::vector<double>{-1.0, 4.0}));
}

TEST(Featurize, AllUnknownIsZeroAndFlagged) {
  const std::vector<std::string> tokens{"x", "y"};
  const auto f = featurize_sentence(tiny_embedding(), tokens);
  EXPECT_TRUE(f.all_oov);
  EXPECT_EQ(f.values, (std::vector<double>{0.0, 0.0}));
}

TEST(Classifier, GradientMatchesFiniteDifferences) {
  SeededRng rng(3);
  const std::size_t n = 7, f_dim = 4, classes = 3;
  Matrix x(n, f_dim);
  for (auto& v : x.data()) v = rng.normal();
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < n; ++i) targets.push_back(rng.below(classes));
  ClassifierModel m{Matrix(classes, f_dim), std::vector<double>(classes), {"a", "b", "c"}};
  for (auto& v : m.weights.data()) v = rng.normal();
  for (auto& v : m.bias) v = rng.normal();
  const double l2 = 0.3, h = 1e-6;
  const auto g = classifier_loss_and_gradient(m, x, targets, l2);
  auto check = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = classifier_loss_and_gradient(m, x, targets, l2).loss;
    p = saved - h;
    const double down = classifier_loss_and_gradient(m, x, targets, l2).loss;
    p = saved;
    EXPECT_NEAR(analytic, (up - down) / (2 * h), 1e-7);
  };
  for (std::size_t i = 0; i < m.weights.size(); ++i) check(m.weights.data()[i], g.weight_grad.data()[i]);
  for (std::size_t c = 0; c < classes; ++c) check(m.bias[c], g.bias_grad[c]);
}

TEST(Classifier, UniformModelLossIsLogClasses) {
  const Matrix x(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  const ClassifierModel m{Matrix(3, 2), std::vector<double>(3, 0.0), {"a", "b", "c"}};
  const std::vector<std::size_t> targets{0, 1, 2, 0};
  EXPECT_NEAR(classifier_loss_and_gradient(m, x, targets, 0.0).loss, std::log(3.0), 1e-15);
}

TEST(Classifier, SeparatesBlobsAndTrainingLossFalls) {
  EmbeddingMatrix emb({"x"}, Matrix(1, 1));
  const auto corpus = blob_corpus(200, 3.0, 4, emb);
  std::vector<std::string> labels;
  for (const auto& s : corpus.samples) labels.push_back(s.label);
  const auto model = train_classifier(emb.values(), labels);
  EXPECT_EQ(model.labels, (std::vector<std::string>{"neg", "pos"}));
  const auto pred = predict(model, emb.values());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  EXPECT_GE(correct, 195u);

  std::vector<std::size_t> targets;
  for (const auto& l : labels) targets.push_back(l == "pos" ? 1 : 0);
  const ClassifierModel zero{Matrix(2, 3), {0.0, 0.0}, {"neg", "pos"}};
  EXPECT_LT(classifier_loss_and_gradient(model, emb.values(), targets, 1e-4).loss,
            classifier_loss_and_gradient(zero, emb.values(), targets, 1e-4).loss);
}

TEST(Classifier, HugeFeaturesStillDescend) {
  // The rate cap keeps gradient descent stable even when the requested
  // learning rate is far too large for the feature scale.
  const Matrix x(4, 1, {1e3, -1e3, 2e3, -2e3});
  const std::vector<std::string> y{"p", "n", "p", "n"};
  ClassifierConfig cfg;
  cfg.learning_rate = 1e6;
  EXPECT_NO_THROW(train_classifier(x, y, cfg));
}

TEST(Classifier, Errors) {
  const Matrix x(3, 1, {1, 2, 3});
  const std::vector<std::string> one_class{"a", "a", "a"};
  EXPECT_THROW(train_classifier(x, one_class), DataError);
  const std::vector<std::string> short_labels{"a", "b"};
  EXPECT_THROW(train_classifier(x, short_labels), std::invalid_argument);
  const Matrix bad(2, 1, {1.0, std::nan("")});
  const std::vector<std::string> two{"a", "b"};
  EXPECT_THROW(train_classifier(bad, two), DataError);
  const auto m = train_classifier(Matrix(2, 1, {1.0, -1.0}), two);
  EXPECT_THROW(predict(m, Matrix(1, 2)), std::invalid_argument);
}

TEST(Classifier, PredictTiesGoToEarlierLabel) {
  const ClassifierModel m{Matrix(2, 1), {0.0, 0.0}, {"first", "second"}};
  EXPECT_EQ(predict(m, Matrix(1, 1, {5.0})), (std::vector<std::string>{"first"}));
}

TEST(FoldSizes, NearEqualWithRemainderFirst) {
  EXPECT_EQ(fold_sizes(500, 10), std::vector<std::size_t>(10, 50));
  EXPECT_EQ(fold_sizes(23, 5), (std::vector<std::size_t>{5, 5, 5, 4, 4}));
  for (std::size_t n = 10; n < 60; ++n) {
    for (std::size_t k = 2; k <= 10; ++k) {
      const auto s = fold_sizes(n, k);
      std::size_t sum = 0;
      for (std::size_t f = 0; f < k; ++f) {
        sum += s[f];
        EXPECT_LE(s.front() - s[f], 1u);
        if (f) {
          EXPECT_LE(s[f], s[f - 1]);
        }
      }
      EXPECT_EQ(sum, n);
    }
  }
}

TEST(CrossValidate, SeparableCorpusDeterministicAndThreadInvariant) {
  EmbeddingMatrix emb({"x"}, Matrix(1, 1));
  const auto corpus = blob_corpus(120, 3.0, 5, emb);
  const auto a = cross_validate(emb, corpus, 10, 42);
  EXPECT_EQ(a.fold_sizes, std::vector<std::size_t>(10, 12));
  EXPECT_GE(a.mean_accuracy, 0.95);
  EXPECT_EQ(a.seed, 42u);
  EXPECT_EQ(a.all_oov_sentences, 0u);
  const auto b = cross_validate(emb, corpus, 10, 42, {}, 4);
  EXPECT_EQ(a.fold_accuracies, b.fold_accuracies);
  EXPECT_EQ(a.mean_accuracy, b.mean_accuracy);
  double sum = 0.0;
  for (double acc : a.fold_accuracies) sum += acc;
  EXPECT_DOUBLE_EQ(a.mean_accuracy, sum / 10.0);
}

TEST(CrossValidate, ChanceLevelOnShuffledLabels) {
  EmbeddingMatrix emb({"x"}, Matrix(1, 1));
  auto corpus = blob_corpus(400, 0.0, 6, emb);
  const auto r = cross_validate(emb, corpus, 10, 7);
  EXPECT_LT(r.mean_accuracy, 0.65);
  EXPECT_GT(r.mean_accuracy, 0.35);
}

TEST(CrossValidate, CountsUnknownSentencesAndRejectsTinyCorpora) {
  EmbeddingMatrix emb({"x"}, Matrix(1, 1));
  auto corpus = blob_corpus(40, 3.0, 8, emb);
  corpus.samples[0].tokens = {"never-seen"};
  EXPECT_EQ(cross_validate(emb, corpus, 5, 1).all_oov_sentences, 1u);
  EXPECT_THROW(cross_validate(emb, corpus, 1, 1), std::invalid_argument);
  corpus.samples.resize(4);
  EXPECT_THROW(cross_validate(emb, corpus, 5, 1), DataError);
}

TEST(ExtrinsicCsv, Layout) {
  std::ostringstream out;
  const std::vector<std::string> variants{"dense", "sparse"}, tasks{"t1", "t2"};
  write_extrinsic_csv(out, variants, tasks, {{0.5, 0.75}, {1.0, 0.125}});
  EXPECT_EQ(out.str(), "embedding,t1,t2,Average\ndense,50.00,75.00,62.50\nsparse,100.00,12.50,56.25\n");
}

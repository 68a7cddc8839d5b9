#pragma once

// Seeded synthetic fixtures: a dense embedding with planted semantic groups,
// matching category lexicon, similarity benchmark, labeled sentences and a
// raw (un-normalized) corpus.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embed_io.hpp"
#include "numcore.hpp"

namespace sparsembed {

struct PlantedSpec {
  std::size_t groups = 10;
  std::size_t group_size = 10;
  std::size_t fillers = 100;
  std::size_t dim = 10;
  double noise = 0.3;  // member = centroid + noise * N(0, I)
  std::uint64_t seed = 42;
};

struct PlantedFixture {
  EmbeddingMatrix dense;
  std::vector<std::vector<std::string>> groups;  // group j -> member words
  CategoryDataset categories;
  Matrix centroids;  // groups x dim
};

/// Letters-only index code (0 -> "a", 25 -> "z", 26 -> "ba"), so fixture
/// words survive text normalization unchanged.
inline std::string letter_code(std::size_t n) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  } while (n > 0);
  return s;
}

inline std::string planted_word(std::size_t group, std::size_t member) {
  return "g" + letter_code(group) + "w" + letter_code(member);
}

inline std::string filler_word(std::size_t i) { return "filler" + letter_code(i); }

/// Group centroids are random +-1 sign patterns, so every coordinate is
/// shared by roughly half the groups and no single axis singles one out;
/// fillers are standard normal points unrelated to any group. Vocabulary
/// order is shuffled so group members are not contiguous.
inline PlantedFixture make_planted_embedding(const PlantedSpec& spec) {
  SeededRng rng = SeededRng(spec.seed).substream(100);
  Matrix centroids(spec.groups, spec.dim);
  for (double& c : centroids.data()) c = rng.below(2) == 0 ? -1.0 : 1.0;

  struct Entry {
    std::string word;
    std::vector<double> v;
  };
  std::vector<Entry> entries;
  std::vector<std::vector<std::string>> groups(spec.groups);
  for (std::size_t g = 0; g < spec.groups; ++g) {
    for (std::size_t m = 0; m < spec.group_size; ++m) {
      Entry e{planted_word(g, m), std::vector<double>(spec.dim)};
      for (std::size_t d = 0; d < spec.dim; ++d) e.v[d] = centroids(g, d) + spec.noise * rng.normal();
      groups[g].push_back(e.word);
      entries.push_back(std::move(e));
    }
  }
  for (std::size_t f = 0; f < spec.fillers; ++f) {
    Entry e{filler_word(f), std::vector<double>(spec.dim)};
    for (double& x : e.v) x = rng.normal();
    entries.push_back(std::move(e));
  }
  const auto order = seeded_shuffle(iota_indices(entries.size()), rng);
  std::vector<std::string> words;
  Matrix values(entries.size(), spec.dim);
  for (std::size_t r = 0; r < order.size(); ++r) {
    words.push_back(entries[order[r]].word);
    std::copy(entries[order[r]].v.begin(), entries[order[r]].v.end(), values.row(r).begin());
  }
  CategoryDataset cats;
  for (std::size_t g = 0; g < spec.groups; ++g) cats.groups.emplace("group" + std::to_string(g), groups[g]);
  return {EmbeddingMatrix(std::move(words), std::move(values)), std::move(groups), std::move(cats),
          std::move(centroids)};
}

/// Pairs over the planted vocabulary scored 0..10 by the cosine of the two
/// dense vectors plus Gaussian jitter.
inline SimilarityBenchmark make_similarity_benchmark(const PlantedFixture& fx, std::size_t pairs, double jitter,
                                                     std::uint64_t seed) {
  SeededRng rng = SeededRng(seed).substream(200);
  SimilarityBenchmark b{"synthetic", {}, 10.0};
  const auto& words = fx.dense.words();
  for (std::size_t p = 0; p < pairs; ++p) {
    std::size_t i = static_cast<std::size_t>(rng.below(words.size()));
    std::size_t j = static_cast<std::size_t>(rng.below(words.size()));
    if (i == j) j = (j + 1) % words.size();
    const double c = cosine_similarity(fx.dense.row(i), fx.dense.row(j));
    const double score = std::clamp(5.0 * (c + 1.0) + jitter * rng.normal(), 0.0, 10.0);
    b.pairs.push_back({words[i], words[j], score});
  }
  return b;
}

/// Sentences whose label is the planted group of their content words; each
/// sentence mixes `content` group words with `noise_tokens` fillers.
inline LabeledCorpus make_labeled_corpus(const PlantedFixture& fx, std::size_t classes, std::size_t samples,
                                         std::size_t content, std::size_t noise_tokens, std::uint64_t seed) {
  SeededRng rng = SeededRng(seed).substream(300);
  std::vector<std::string> fillers;
  for (const auto& w : fx.dense.words())
    if (w.rfind("filler", 0) == 0) fillers.push_back(w);
  LabeledCorpus corpus;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t c = s % classes;
    LabeledSentence sent;
    sent.label = "class" + std::to_string(c);
    for (std::size_t t = 0; t < content; ++t)
      sent.tokens.push_back(fx.groups[c][static_cast<std::size_t>(rng.below(fx.groups[c].size()))]);
    for (std::size_t t = 0; t < noise_tokens && !fillers.empty(); ++t)
      sent.tokens.push_back(fillers[static_cast<std::size_t>(rng.below(fillers.size()))]);
    corpus.samples.push_back(std::move(sent));
  }
  for (std::size_t c = 0; c < classes; ++c) corpus.label_set.push_back("class" + std::to_string(c));
  std::sort(corpus.label_set.begin(), corpus.label_set.end());
  return corpus;
}

/// Un-normalized text lines (mixed case, digits, punctuation) built from the
/// planted vocabulary.
inline std::vector<std::string> make_raw_corpus(const PlantedFixture& fx, std::size_t lines, std::uint64_t seed) {
  SeededRng rng = SeededRng(seed).substream(400);
  static const char* kPunct[] = {",", ".", "!", "?", ";", " -", ":"};
  std::vector<std::string> out;
  for (std::size_t l = 0; l < lines; ++l) {
    std::string line;
    const std::size_t len = 4 + static_cast<std::size_t>(rng.below(6));
    for (std::size_t t = 0; t < len; ++t) {
      if (t) line += ' ';
      std::string w = fx.dense.words()[static_cast<std::size_t>(rng.below(fx.dense.size()))];
      if (rng.below(3) == 0) std::transform(w.begin(), w.end(), w.begin(), [](char ch) {
          return static_cast<char>(ch >= 'a' && ch <= 'z' ? ch - 32 : ch);
        });
      line += w;
      if (rng.below(4) == 0) line += kPunct[rng.below(7)];
      if (rng.below(5) == 0) line += " " + std::to_string(rng.below(1000));
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace sparsembed

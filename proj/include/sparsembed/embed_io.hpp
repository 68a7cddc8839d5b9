#pragma once

// Text formats:
//   embeddings   word2vec-style text. Optional header "V dim", then one line
//                per word: token followed by dim reals, whitespace-separated.
//   benchmarks   word1<TAB>word2<TAB>score
//   categories   category<TAB>word
//   sentences    label<TAB>sentence text
// LF and CRLF line endings are accepted everywhere. Error line numbers are
// 1-based physical line numbers.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "numcore.hpp"
#include "textprep.hpp"

namespace sparsembed {

/// Vocabulary plus a V x dim value matrix. Rows follow insertion order.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::vector<std::string> words, Matrix values)
      : words_(std::move(words)), values_(std::move(values)) {
    if (words_.empty()) throw DataError("embedding has an empty vocabulary");
    if (values_.rows() != words_.size())
      throw DataError("embedding row count " + std::to_string(values_.rows()) + " does not match vocabulary size " +
                      std::to_string(words_.size()));
    if (values_.cols() == 0) throw DataError("embedding dimension must be positive");
    if (!values_.all_finite()) throw DataError("embedding contains non-finite values");
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i].empty()) throw DataError("embedding contains an empty token");
      if (!index_.emplace(words_[i], i).second) throw DataError("duplicate token \"" + words_[i] + "\"");
    }
  }

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t dim() const noexcept { return values_.cols(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const Matrix& values() const noexcept { return values_; }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }

  std::optional<std::size_t> find(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  std::size_t index_of(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw DataError("word \"" + word + "\" is not in the vocabulary");
    return it->second;
  }

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.words_ == b.words_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> words_;
  Matrix values_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace io_detail {

/// Reads one line, strips a trailing '\r', bumps the line counter.
inline bool read_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = s.find('\t', start);
    out.push_back(s.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::size_t> parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

/// Formats `v` with `precision` digits after the decimal point. Ties round
/// half-to-even on the exact binary value (0.25 -> "0.2"); a result that
/// prints as zero never carries a minus sign.
inline void append_fixed(std::string& out, double v, int precision) {
  char buf[512];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  if (r.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  std::string_view s(buf, static_cast<std::size_t>(r.ptr - buf));
  if (!s.empty() && s.front() == '-' && s.find_first_not_of("-0.") == std::string_view::npos) s.remove_prefix(1);
  out.append(s);
}

}  // namespace io_detail

/// Reads an embedding text stream. Blank lines are skipped. Header detection:
/// a first line holding exactly two non-negative integers is a "V dim" header.
inline EmbeddingMatrix parse_dense_embeddings(std::istream& in) {
  using namespace io_detail;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared_rows;
  std::optional<std::size_t> dim;
  std::vector<std::string> words;
  std::vector<double> values;
  std::unordered_map<std::string, std::size_t> seen;
  bool first = true;

  while (read_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      if (fields.size() == 2) {
        const auto rows = parse_count(fields[0]);
        const auto cols = parse_count(fields[1]);
        if (rows && cols) {
          if (*cols == 0) throw DataError("header declares zero dimensions", line_no);
          declared_rows = *rows;
          dim = *cols;
          continue;
        }
      }
    }
    if (fields.size() < 2) throw DataError("expected a token followed by values", line_no);
    const std::size_t n = fields.size() - 1;
    if (!dim) dim = n;
    if (n != *dim)
      throw DataError("dimension mismatch: expected " + std::to_string(*dim) + " values, found " + std::to_string(n),
                      line_no);
    std::string word(fields[0]);
    if (!seen.emplace(word, line_no).second) throw DataError("duplicate token \"" + word + "\"", line_no);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = parse_real(fields[k]);
      if (!v) throw DataError("non-numeric field \"" + std::string(fields[k]) + "\"", line_no);
      values.push_back(*v);
    }
    words.push_back(std::move(word));
  }
  if (words.empty()) throw DataError("empty embedding input");
  if (declared_rows && *declared_rows != words.size())
    throw DataError("header declares " + std::to_string(*declared_rows) + " words but " +
                    std::to_string(words.size()) + " were read");
  const std::size_t rows = words.size();
  return EmbeddingMatrix(std::move(words), Matrix(rows, *dim, std::move(values)));
}

/// Header line "V dim" then "word v1 ... vdim" per row, each value printed
/// with `precision` decimals (see io_detail::append_fixed for rounding).
inline void write_embeddings(std::ostream& out, const EmbeddingMatrix& emb, int precision = 6) {
  if (precision < 1) throw std::invalid_argument("write_embeddings: precision must be >= 1");
  std::string buf;
  buf = std::to_string(emb.size()) + " " + std::to_string(emb.dim()) + "\n";
  out << buf;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    buf.clear();
    buf += emb.words()[i];
    for (double v : emb.row(i)) {
      buf.push_back(' ');
      io_detail::append_fixed(buf, v, precision);
    }
    buf.push_back('\n');
    out << buf;
  }
}

// ---------------------------------------------------------------------------

struct SimilarityPair {
  std::string first;
  std::string second;
  double score = 0.0;
};

struct SimilarityBenchmark {
  std::string name;
  std::vector<SimilarityPair> pairs;
  double scale_max = 10.0;
};

/// Keeps every pair, including out-of-vocabulary ones; evaluation filters.
inline SimilarityBenchmark parse_similarity_benchmark(std::istream& in, double scale_max, std::string name = "benchmark") {
  using namespace io_detail;
  if (!(scale_max > 0.0)) throw std::invalid_argument("scale_max must be positive");
  SimilarityBenchmark bench{std::move(name), {}, scale_max};
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw DataError("expected word1<TAB>word2<TAB>score", line_no);
    const auto w1 = trim(fields[0]);
    const auto w2 = trim(fields[1]);
    if (w1.empty() || w2.empty()) throw DataError("empty word in benchmark pair", line_no);
    const auto score = parse_real(trim(fields[2]));
    if (!score) throw DataError("non-numeric score \"" + std::string(fields[2]) + "\"", line_no);
    if (*score < 0.0 || *score > scale_max)
      throw DataError("score " + std::string(trim(fields[2])) + " outside [0, " + std::to_string(scale_max) + "]",
                      line_no);
    bench.pairs.push_back({std::string(w1), std::string(w2), *score});
  }
  if (bench.pairs.empty()) throw DataError("benchmark has no pairs");
  return bench;
}

// ---------------------------------------------------------------------------

struct CategoryBounds {
  std::size_t min_size = 5;
  std::size_t max_size = 250;
};

/// Semantic groups S_j. Group words are unique; n_j = group size.
struct CategoryDataset {
  std::map<std::string, std::vector<std::string>> groups;
  std::size_t discarded = 0;  // groups dropped by the most recent filter

  std::size_t total_words() const {
    std::size_t n = 0;
    for (const auto& [_, ws] : groups) n += ws.size();
    return n;
  }
};

/// Maps every group word to the vocabulary entry with the same lowercase
/// form (first vocabulary occurrence wins), drops words without one, then
/// discards groups outside [bounds.min_size, bounds.max_size]. Without a
/// vocabulary only the size bounds apply. Idempotent.
inline CategoryDataset filter_categories(const CategoryDataset& data, const EmbeddingMatrix* vocab,
                                         CategoryBounds bounds = {}) {
  std::unordered_map<std::string, std::string> lower_to_vocab;
  if (vocab) {
    for (const auto& w : vocab->words()) lower_to_vocab.emplace(lowercase_utf8(w), w);
  }
  CategoryDataset out;
  for (const auto& [name, words] : data.groups) {
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const auto& w : words) {
      std::string mapped = w;
      if (vocab) {
        if (vocab->contains(w)) {
          mapped = w;
        } else {
          auto it = lower_to_vocab.find(lowercase_utf8(w));
          if (it == lower_to_vocab.end()) continue;
          mapped = it->second;
        }
      }
      if (seen.insert(mapped).second) kept.push_back(std::move(mapped));
    }
    if (kept.size() < bounds.min_size || kept.size() > bounds.max_size) {
      ++out.discarded;
      continue;
    }
    out.groups.emplace(name, std::move(kept));
  }
  if (out.groups.empty()) throw DataError("no category survives filtering");
  return out;
}

/// Reads "category<TAB>word" lines (words lowercased, deduplicated within a
/// group, file order kept) and applies filter_categories.
inline CategoryDataset parse_category_dataset(std::istream& in, const EmbeddingMatrix* vocab = nullptr,
                                              CategoryBounds bounds = {}) {
  using namespace io_detail;
  CategoryDataset raw;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) throw DataError("expected category<TAB>word", line_no);
    const auto cat = trim(fields[0]);
    const auto word = trim(fields[1]);
    if (cat.empty() || word.empty()) throw DataError("empty category or word", line_no);
    std::string lw = lowercase_utf8(word);
    std::string key(cat);
    if (seen[key].insert(lw).second) raw.groups[key].push_back(std::move(lw));
  }
  return filter_categories(raw, vocab, bounds);
}

// ---------------------------------------------------------------------------

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::string label;
};

struct LabeledCorpus {
  std::vector<LabeledSentence> samples;
  std::vector<std::string> label_set;  // sorted, unique
};

/// Reads "label<TAB>sentence" lines; sentences are normalized with `rules`
/// and split on whitespace.
inline LabeledCorpus parse_labeled_sentences(std::istream& in, const NormalizationRules& rules = {}) {
  using namespace io_detail;
  LabeledCorpus corpus;
  std::set<std::string> labels;
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("missing tab separator", line_no);
    const auto label = trim(std::string_view(line).substr(0, tab));
    if (label.empty()) throw DataError("empty label", line_no);
    auto tokens = split_whitespace(normalize_text(std::string_view(line).substr(tab + 1), rules));
    if (tokens.empty()) throw DataError("empty sentence after normalization", line_no);
    labels.emplace(label);
    corpus.samples.push_back({std::move(tokens), std::string(label)});
  }
  if (corpus.samples.empty()) throw DataError("labeled corpus is empty");
  corpus.label_set.assign(labels.begin(), labels.end());
  return corpus;
}

}  // namespace sparsembed

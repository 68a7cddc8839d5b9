#pragma once

// Interpretability instrumentation for embedding dimensions.
//
// Category score for dimension i and group S_j (n_j words), strictness gamma:
//
//   IS+_ij = 100 |S_j ∩ top_i(gamma n_j)| / n_j
//   IS-_ij = 100 |S_j ∩ bottom_i(gamma n_j)| / n_j
//   IS_ij  = max(IS+_ij, IS-_ij),   IS_i = max_j IS_ij,   IS = mean_i IS_i
//
// Every ranking in this file sorts by value and breaks ties by vocabulary
// index (earlier word first), in both directions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "embed_io.hpp"
#include "errors.hpp"
#include "numcore.hpp"
#include "spine.hpp"
#include "spowv.hpp"

namespace sparsembed {

enum class Direction { positive, negative };

inline char direction_symbol(Direction d) { return d == Direction::positive ? '+' : '-'; }

/// Full vocabulary order for one dimension: descending for positive,
/// ascending for negative.
inline std::vector<std::size_t> rank_dimension(const EmbeddingMatrix& emb, std::size_t dim, Direction dir) {
  if (dim >= emb.dim())
    throw std::invalid_argument("dimension " + std::to_string(dim) + " out of range [0, " + std::to_string(emb.dim()) +
                                ")");
  const Matrix& m = emb.values();
  auto order = iota_indices(emb.size());
  if (dir == Direction::positive) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m(a, dim) > m(b, dim); });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m(a, dim) < m(b, dim); });
  }
  return order;
}

inline std::vector<std::string> top_words(const EmbeddingMatrix& emb, std::size_t dim, std::size_t count,
                                          Direction dir = Direction::positive) {
  if (count < 1 || count > emb.size())
    throw std::invalid_argument("top_words: count must lie in [1, " + std::to_string(emb.size()) + "]");
  const auto order = rank_dimension(emb, dim, dir);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) out.push_back(emb.words()[order[r]]);
  return out;
}

struct PairScore {
  double plus = 0.0;
  double minus = 0.0;
  double score = 0.0;
};

namespace interpret_detail {

/// position[w] = rank of word w in `order`.
inline std::vector<std::size_t> positions(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = r;
  return pos;
}

inline std::vector<std::size_t> category_indices(const EmbeddingMatrix& emb, std::span<const std::string> words) {
  std::vector<std::size_t> idx;
  idx.reserve(words.size());
  for (const auto& w : words) {
    const auto i = emb.find(w);
    if (!i) throw std::invalid_argument("category word \"" + w + "\" is not in the vocabulary; filter categories first");
    idx.push_back(*i);
  }
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
    throw std::invalid_argument("category contains duplicate words");
  return idx;
}

inline PairScore score_from_positions(std::span<const std::size_t> members, const std::vector<std::size_t>& desc_pos,
                                      const std::vector<std::size_t>& asc_pos, std::size_t gamma,
                                      std::size_t vocab) {
  const std::size_t n = members.size();
  const std::size_t window = gamma * n;
  if (window > vocab)
    throw std::invalid_argument("category of " + std::to_string(n) + " words with gamma " + std::to_string(gamma) +
                                " exceeds vocabulary size " + std::to_string(vocab));
  std::size_t top = 0, bottom = 0;
  for (std::size_t w : members) {
    if (desc_pos[w] < window) ++top;
    if (asc_pos[w] < window) ++bottom;
  }
  PairScore s;
  s.plus = 100.0 * static_cast<double>(top) / static_cast<double>(n);
  s.minus = 100.0 * static_cast<double>(bottom) / static_cast<double>(n);
  s.score = std::max(s.plus, s.minus);
  return s;
}

}  // namespace interpret_detail

inline PairScore interpretability_pair_score(const EmbeddingMatrix& emb, std::span<const std::string> category,
                                             std::size_t dim, std::size_t gamma) {
  if (category.empty()) throw std::invalid_argument("empty category");
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
  const auto members = interpret_detail::category_indices(emb, category);
  const auto desc = interpret_detail::positions(rank_dimension(emb, dim, Direction::positive));
  const auto asc = interpret_detail::positions(rank_dimension(emb, dim, Direction::negative));
  return interpret_detail::score_from_positions(members, desc, asc, gamma, emb.size());
}

struct DimensionScore {
  std::size_t dimension = 0;
  double score = 0.0;
  std::string category;
  Direction sign = Direction::positive;
};

struct InterpretabilityResult {
  std::size_t gamma = 1;
  std::vector<DimensionScore> per_dimension;
  double overall = 0.0;
};

/// IS over all dimensions. The best category is the first (in name order)
/// attaining the maximum; its sign is '+' when IS+ >= IS-.
inline InterpretabilityResult interpretability_score(const EmbeddingMatrix& emb, const CategoryDataset& data,
                                                     std::size_t gamma = 1, unsigned threads = 1) {
  if (data.groups.empty()) throw DataError("empty category dataset");
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
  std::vector<std::pair<const std::string*, std::vector<std::size_t>>> groups;
  for (const auto& [name, words] : data.groups) {
    if (words.empty()) throw DataError("category \"" + name + "\" is empty");
    groups.emplace_back(&name, interpret_detail::category_indices(emb, words));
  }

  InterpretabilityResult result;
  result.gamma = gamma;
  result.per_dimension.resize(emb.dim());
  parallel_for(emb.dim(), threads, [&](std::size_t i) {
    const auto desc = interpret_detail::positions(rank_dimension(emb, i, Direction::positive));
    const auto asc = interpret_detail::positions(rank_dimension(emb, i, Direction::negative));
    DimensionScore best{i, -1.0, {}, Direction::positive};
    for (const auto& [name, members] : groups) {
      const auto s = interpret_detail::score_from_positions(members, desc, asc, gamma, emb.size());
      if (s.score > best.score) {
        best.score = s.score;
        best.category = *name;
        best.sign = s.plus >= s.minus ? Direction::positive : Direction::negative;
      }
    }
    result.per_dimension[i] = std::move(best);
  });
  double sum = 0.0;
  for (const auto& d : result.per_dimension) sum += d.score;
  result.overall = sum / static_cast<double>(emb.dim());
  return result;
}

/// dimension,IS_i,best_category,sign
inline void write_interpretability_csv(std::ostream& out, const InterpretabilityResult& r) {
  std::string buf = "dimension,IS_i,best_category,sign\n";
  for (const auto& d : r.per_dimension) {
    buf += std::to_string(d.dimension) + ",";
    io_detail::append_fixed(buf, d.score, 6);
    buf += "," + d.category + ",";
    buf.push_back(direction_symbol(d.sign));
    buf.push_back('\n');
  }
  out << buf;
}

// ---------------------------------------------------------------------------

struct DominatingDimension {
  std::size_t dimension = 0;
  std::vector<std::string> top_words;
};

/// The word's argmax dimension (first index on ties) and that dimension's
/// top words in descending order.
inline DominatingDimension dominating_dimension(const EmbeddingMatrix& emb, const std::string& word,
                                                std::size_t top_k = 5) {
  const auto idx = emb.find(word);
  if (!idx) throw DataError("word \"" + word + "\" is not in the vocabulary");
  const auto row = emb.row(*idx);
  const std::size_t dim = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  return {dim, top_words(emb, dim, std::min(top_k, emb.size()), Direction::positive)};
}

/// word,dimension,rank,top_word: one row per top word, the layout of a
/// qualitative top-words table.
inline void write_top_words_report(std::ostream& out, std::span<const std::pair<std::string, DominatingDimension>> rows) {
  std::string buf = "word,dimension,rank,top_word\n";
  for (const auto& [word, dd] : rows)
    for (std::size_t r = 0; r < dd.top_words.size(); ++r)
      buf += word + "," + std::to_string(dd.dimension) + "," + std::to_string(r + 1) + "," + dd.top_words[r] + "\n";
  out << buf;
}

// ---------------------------------------------------------------------------
// Coherence-based hyperparameter scoring

/// Activity threshold of a sparse space: values > kZeroEps count as active in
/// a non-negative space; in a signed space |v| must exceed the 95th
/// percentile (nearest rank) of all |values|.
struct ActivityRule {
  bool signed_space = false;
  double threshold = kZeroEps;

  static ActivityRule for_embedding(const EmbeddingMatrix& emb) {
    const auto data = emb.values().data();
    const bool has_negative = std::any_of(data.begin(), data.end(), [](double v) { return v < 0.0; });
    if (!has_negative) return {false, kZeroEps};
    std::vector<double> mags(data.size());
    std::transform(data.begin(), data.end(), mags.begin(), [](double v) { return std::abs(v); });
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(mags.size())));
    const std::size_t k = rank == 0 ? 0 : rank - 1;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
    return {true, mags[k]};
  }

  bool active(double v) const { return signed_space ? std::abs(v) > threshold : v > threshold; }
};

/// For each probe word and each dimension where it is active, take the top_k
/// words of that dimension (on the side of the probe's sign) and add the
/// dense-space cosine of every unordered pair. Pairs with a word missing from
/// the dense space or a zero dense vector add nothing.
inline double coherence_score(const EmbeddingMatrix& sparse, const EmbeddingMatrix& dense,
                              std::span<const std::string> probes, std::size_t top_k) {
  if (probes.empty()) throw std::invalid_argument("coherence_score: empty probe set");
  if (top_k < 2) throw std::invalid_argument("coherence_score: top_k must be >= 2");
  for (const auto& p : probes) {
    if (!sparse.contains(p) || !dense.contains(p))
      throw std::invalid_argument("coherence_score: probe \"" + p + "\" missing from a vocabulary");
  }
  const auto rule = ActivityRule::for_embedding(sparse);
  const std::size_t k = std::min(top_k, sparse.size());
  std::map<std::pair<std::size_t, int>, double> cache;  // (dim, direction) -> pair sum

  auto dimension_sum = [&](std::size_t dim, Direction dir) {
    const auto key = std::make_pair(dim, dir == Direction::positive ? 0 : 1);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const auto order = rank_dimension(sparse, dim, dir);
    std::vector<std::optional<std::size_t>> dense_rows(k);
    for (std::size_t r = 0; r < k; ++r) dense_rows[r] = dense.find(sparse.words()[order[r]]);
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      if (!dense_rows[a] || squared_norm(dense.row(*dense_rows[a])) == 0.0) continue;
      for (std::size_t b = a + 1; b < k; ++b) {
        if (!dense_rows[b] || squared_norm(dense.row(*dense_rows[b])) == 0.0) continue;
        s += cosine_similarity(dense.row(*dense_rows[a]), dense.row(*dense_rows[b]));
      }
    }
    cache.emplace(key, s);
    return s;
  };

  double total = 0.0;
  for (const auto& p : probes) {
    const auto row = sparse.row(sparse.index_of(p));
    for (std::size_t d = 0; d < sparse.dim(); ++d) {
      if (!rule.active(row[d])) continue;
      total += dimension_sum(d, row[d] >= 0.0 ? Direction::positive : Direction::negative);
    }
  }
  return total;
}

using TrainerConfig = std::variant<SpowvConfig, SpineConfig>;

struct SearchRecord {
  std::size_t grid_index = 0;
  TrainerConfig config;
  double score = 0.0;
  bool failed = false;
  std::string error;
};

/// Produces the transformed embedding for one trainer configuration.
inline EmbeddingMatrix train_embedding(const TrainerConfig& cfg, const EmbeddingMatrix& x) {
  if (const auto* s = std::get_if<SpowvConfig>(&cfg)) return spowv_embedding(x, spowv_fit(x, *s).codes);
  const auto& sp = std::get<SpineConfig>(cfg);
  return spine_transform(spine_train(x, sp).model, x, sp.threads);
}

/// Trains every configuration and ranks them by coherence_score, highest
/// first; ties keep grid order. A configuration that throws is recorded as
/// failed and ranked after all successful ones.
inline std::vector<SearchRecord> hyperparam_search(std::span<const TrainerConfig> grid, const EmbeddingMatrix& x,
                                                   const EmbeddingMatrix& dense, std::span<const std::string> probes,
                                                   std::size_t top_k = 10, unsigned threads = 1) {
  if (grid.empty()) throw std::invalid_argument("hyperparam_search: empty grid");
  std::vector<SearchRecord> records(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    SearchRecord& rec = records[g];
    rec.grid_index = g;
    rec.config = grid[g];
    try {
      rec.score = coherence_score(train_embedding(grid[g], x), dense, probes, top_k);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.score = -std::numeric_limits<double>::infinity();
      rec.error = e.what();
    }
  });
  std::stable_sort(records.begin(), records.end(), [](const SearchRecord& a, const SearchRecord& b) {
    if (a.failed != b.failed) return !a.failed;
    return a.score > b.score;
  });
  return records;
}

// ---------------------------------------------------------------------------
// Word intrusion questions

struct IntrusionQuestion {
  std::array<std::string, 5> words;
  std::size_t intruder_index = 0;
  std::size_t source_dimension = 0;
  std::size_t home_dimension = 0;
};

/// Rank bands (0-based positions in a dimension's descending order):
/// top 10% = [0, V/10), bottom half = [V - V/2, V), top 20% = [0, V/5).
struct IntrusionBands {
  std::size_t top_source = 0;
  std::size_t bottom_start = 0;
  std::size_t top_home = 0;

  static IntrusionBands for_vocabulary(std::size_t vocab) { return {vocab / 10, vocab - vocab / 2, vocab / 5}; }
};

/// Each question takes four distinct words from the source dimension's top
/// 10% and one intruder from its bottom half that sits in the top 20% of a
/// different (home) dimension; the intruder's slot is drawn uniformly. A
/// source dimension without any eligible intruder is redrawn; after
/// `max_retries` consecutive misses generation fails with DataError.
inline std::vector<IntrusionQuestion> generate_intrusion_questions(const EmbeddingMatrix& emb, std::size_t count,
                                                                   SeededRng& rng, std::size_t max_retries = 1000) {
  const std::size_t vocab = emb.size(), dims = emb.dim();
  const auto bands = IntrusionBands::for_vocabulary(vocab);
  if (bands.top_source < 4)
    throw DataError("intrusion questions need at least 4 words in the top 10% band (vocabulary >= 40), got " +
                    std::to_string(vocab));
  if (dims < 2) throw DataError("intrusion questions need at least 2 dimensions");

  std::vector<std::vector<std::size_t>> order(dims), pos(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    order[d] = rank_dimension(emb, d, Direction::positive);
    pos[d] = interpret_detail::positions(order[d]);
  }
  std::vector<std::vector<std::size_t>> home_dims(vocab);
  for (std::size_t d = 0; d < dims; ++d)
    for (std::size_t r = 0; r < bands.top_home; ++r) home_dims[order[d][r]].push_back(d);

  std::vector<std::optional<std::vector<std::size_t>>> eligible(dims);
  auto eligible_for = [&](std::size_t s) -> const std::vector<std::size_t>& {
    if (!eligible[s]) {
      std::vector<std::size_t> e;
      for (std::size_t r = bands.bottom_start; r < vocab; ++r) {
        const std::size_t w = order[s][r];
        if (std::any_of(home_dims[w].begin(), home_dims[w].end(), [&](std::size_t h) { return h != s; }))
          e.push_back(w);
      }
      std::sort(e.begin(), e.end());
      eligible[s] = std::move(e);
    }
    return *eligible[s];
  };

  std::vector<IntrusionQuestion> out;
  out.reserve(count);
  std::vector<std::size_t> top(bands.top_source);
  for (std::size_t q = 0; q < count; ++q) {
    bool made = false;
    for (std::size_t attempt = 0; attempt < max_retries && !made; ++attempt) {
      const std::size_t s = static_cast<std::size_t>(rng.below(dims));
      const auto& cands = eligible_for(s);
      if (cands.empty()) continue;

      std::copy(order[s].begin(), order[s].begin() + static_cast<std::ptrdiff_t>(bands.top_source), top.begin());
      for (std::size_t i = 0; i < 4; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(top.size() - i));
        std::swap(top[i], top[j]);
      }
      const std::size_t intruder = cands[static_cast<std::size_t>(rng.below(cands.size()))];
      std::vector<std::size_t> homes;
      for (std::size_t h : home_dims[intruder])
        if (h != s) homes.push_back(h);
      const std::size_t home = homes[static_cast<std::size_t>(rng.below(homes.size()))];
      const std::size_t slot = static_cast<std::size_t>(rng.below(5));

      IntrusionQuestion question;
      question.source_dimension = s;
      question.home_dimension = home;
      question.intruder_index = slot;
      std::size_t next = 0;
      for (std::size_t i = 0; i < 5; ++i)
        question.words[i] = emb.words()[i == slot ? intruder : top[next++]];
      out.push_back(std::move(question));
      made = true;
    }
    if (!made)
      throw DataError("no eligible intruder found after " + std::to_string(max_retries) +
                      " attempts: no bottom-half word of a sampled dimension is in the top 20% of another");
  }
  return out;
}

/// source_dimension<TAB>home_dimension<TAB>w1..w5<TAB>intruder_index
inline void write_intrusion_questions(std::ostream& out, std::span<const IntrusionQuestion> questions) {
  std::string buf;
  for (const auto& q : questions) {
    buf += std::to_string(q.source_dimension) + "\t" + std::to_string(q.home_dimension);
    for (const auto& w : q.words) buf += "\t" + w;
    buf += "\t" + std::to_string(q.intruder_index) + "\n";
  }
  out << buf;
}

// ---------------------------------------------------------------------------
// Sorted-dimension heatmap

enum class CellSign { negative, zero, positive };

inline CellSign classify_sign(double v, double eps = kZeroEps) {
  if (std::abs(v) < eps) return CellSign::zero;
  return v > 0.0 ? CellSign::positive : CellSign::negative;
}

inline char sign_symbol(CellSign s) {
  switch (s) {
    case CellSign::positive: return '+';
    case CellSign::negative: return '-';
    default: return '0';
  }
}

struct HeatmapSpec {
  std::vector<std::string> words;
  std::size_t group_split = 0;            // rows [0, group_split) form the sort group
  std::vector<std::size_t> permutation;   // permutation[rank] = original dimension
  Matrix values;                          // words x dims, columns in rank order
};

/// Columns sorted by descending mean over the first `sort_group_size` words;
/// ties keep original dimension order (so an all-zero embedding gets the
/// identity permutation).
inline HeatmapSpec build_heatmap(const EmbeddingMatrix& emb, std::span<const std::string> words,
                                 std::size_t sort_group_size) {
  if (words.empty()) throw std::invalid_argument("heatmap: empty word list");
  if (sort_group_size < 1 || sort_group_size > words.size())
    throw std::invalid_argument("heatmap: sort group size must lie in [1, " + std::to_string(words.size()) + "]");
  std::vector<std::size_t> rows;
  for (const auto& w : words) rows.push_back(emb.index_of(w));

  std::vector<double> mean(emb.dim(), 0.0);
  for (std::size_t r = 0; r < sort_group_size; ++r) {
    const auto v = emb.row(rows[r]);
    for (std::size_t d = 0; d < emb.dim(); ++d) mean[d] += v[d];
  }
  for (double& m : mean) m /= static_cast<double>(sort_group_size);

  HeatmapSpec spec;
  spec.words.assign(words.begin(), words.end());
  spec.group_split = sort_group_size;
  spec.permutation = iota_indices(emb.dim());
  std::stable_sort(spec.permutation.begin(), spec.permutation.end(),
                   [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
  spec.values = Matrix(words.size(), emb.dim());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < emb.dim(); ++c) spec.values(r, c) = emb.values()(rows[r], spec.permutation[c]);
  return spec;
}

/// embedding,word,dim_rank,dimension,sign,value
inline void write_heatmap_csv(std::ostream& out, std::span<const HeatmapSpec> specs,
                              std::span<const std::string> names) {
  if (names.size() != specs.size()) throw std::invalid_argument("heatmap: one name per embedding required");
  std::string buf = "embedding,word,dim_rank,dimension,sign,value\n";
  for (std::size_t e = 0; e < specs.size(); ++e) {
    const auto& s = specs[e];
    for (std::size_t r = 0; r < s.words.size(); ++r) {
      for (std::size_t c = 0; c < s.permutation.size(); ++c) {
        const double v = s.values(r, c);
        buf += names[e] + "," + s.words[r] + "," + std::to_string(c) + "," + std::to_string(s.permutation[c]) + ",";
        buf.push_back(sign_symbol(classify_sign(v)));
        buf.push_back(',');
        io_detail::append_fixed(buf, v, 6);
        buf.push_back('\n');
      }
    }
  }
  out << buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Standalone SVG: one panel per embedding, one row per word, red/blue/white
/// cells for positive/negative/zero values, and a rule under the sort group.
inline void write_heatmap_svg(std::ostream& out, std::span<const HeatmapSpec> specs,
                              std::span<const std::string> names) {
  if (names.size() != specs.size()) throw std::invalid_argument("heatmap: one name per embedding required");
  constexpr double kCellH = 14.0, kLabelW = 140.0, kTitleH = 20.0, kGap = 16.0, kPanelW = 800.0;
  double height = kGap;
  for (const auto& s : specs) height += kTitleH + kCellH * static_cast<double>(s.words.size()) + kGap;
  const double width = kLabelW + kPanelW + kGap;

  std::string buf;
  auto num = [&](double v) { io_detail::append_fixed(buf, v, 2); };
  buf += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  num(width);
  buf += "\" height=\"";
  num(height);
  buf += "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double y = kGap;
  for (std::size_t e = 0; e < specs.size(); ++e) {
    const auto& s = specs[e];
    const std::size_t cols = s.permutation.size();
    const double cell_w = kPanelW / static_cast<double>(std::max<std::size_t>(cols, 1));
    buf += "<text x=\"4\" y=\"";
    num(y + 14.0);
    buf += "\" font-weight=\"bold\">" + xml_escape(names[e]) + "</text>\n";
    y += kTitleH;
    for (std::size_t r = 0; r < s.words.size(); ++r) {
      buf += "<text x=\"4\" y=\"";
      num(y + kCellH * static_cast<double>(r) + 11.0);
      buf += "\">" + xml_escape(s.words[r]) + "</text>\n";
      for (std::size_t c = 0; c < cols; ++c) {
        const auto sign = classify_sign(s.values(r, c));
        if (sign == CellSign::zero) continue;
        buf += "<rect x=\"";
        num(kLabelW + cell_w * static_cast<double>(c));
        buf += "\" y=\"";
        num(y + kCellH * static_cast<double>(r));
        buf += "\" width=\"";
        num(cell_w);
        buf += "\" height=\"";
        num(kCellH);
        buf += sign == CellSign::positive ? "\" fill=\"#d7301f\"/>\n" : "\" fill=\"#2166ac\"/>\n";
      }
    }
    buf += "<rect x=\"";
    num(kLabelW);
    buf += "\" y=\"";
    num(y);
    buf += "\" width=\"";
    num(kPanelW);
    buf += "\" height=\"";
    num(kCellH * static_cast<double>(s.words.size()));
    buf += "\" fill=\"none\" stroke=\"black\"/>\n<line x1=\"";
    num(kLabelW);
    buf += "\" x2=\"";
    num(kLabelW + kPanelW);
    buf += "\" y1=\"";
    num(y + kCellH * static_cast<double>(s.group_split));
    buf += "\" y2=\"";
    num(y + kCellH * static_cast<double>(s.group_split));
    buf += "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    y += kCellH * static_cast<double>(s.words.size()) + kGap;
  }
  buf += "</svg>\n";
  out << buf;
}

}  // namespace sparsembed

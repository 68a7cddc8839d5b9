#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embed_io.hpp"
#include "errors.hpp"
#include "numcore.hpp"

namespace sparsembed {

struct IntrinsicResult {
  std::string benchmark;
  double rho = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // out of vocabulary, or a zero vector
  double coverage = 0.0;          // pairs_used / total pairs
};

/// Spearman correlation between per-pair cosine similarity and the human
/// scores. Pairs with an out-of-vocabulary word are skipped, as are pairs
/// where either vector is all-zero (cosine undefined, common in sparse
/// spaces); both count toward pairs_skipped.
inline IntrinsicResult evaluate_benchmark(const EmbeddingMatrix& emb, const SimilarityBenchmark& bench) {
  std::vector<double> model_scores, human_scores;
  model_scores.reserve(bench.pairs.size());
  human_scores.reserve(bench.pairs.size());
  for (const auto& p : bench.pairs) {
    const auto a = emb.find(p.first);
    const auto b = emb.find(p.second);
    if (!a || !b) continue;
    const auto va = emb.row(*a);
    const auto vb = emb.row(*b);
    if (squared_norm(va) == 0.0 || squared_norm(vb) == 0.0) continue;
    model_scores.push_back(cosine_similarity(va, vb));
    human_scores.push_back(p.score);
  }
  if (model_scores.size() < 2)
    throw DataError("benchmark \"" + bench.name + "\" has fewer than 2 usable pairs (" +
                    std::to_string(model_scores.size()) + " of " + std::to_string(bench.pairs.size()) + ")");
  IntrinsicResult r;
  r.benchmark = bench.name;
  r.rho = spearman_correlation(model_scores, human_scores);
  r.pairs_used = model_scores.size();
  r.pairs_skipped = bench.pairs.size() - r.pairs_used;
  r.coverage = static_cast<double>(r.pairs_used) / static_cast<double>(bench.pairs.size());
  return r;
}

/// benchmark,rho,pairs_used,coverage
inline void write_intrinsic_csv(std::ostream& out, std::span<const IntrinsicResult> results) {
  std::string buf = "benchmark,rho,pairs_used,coverage\n";
  for (const auto& r : results) {
    buf += r.benchmark + ",";
    io_detail::append_fixed(buf, r.rho, 6);
    buf += "," + std::to_string(r.pairs_used) + ",";
    io_detail::append_fixed(buf, r.coverage, 6);
    buf += "\n";
  }
  out << buf;
}

}  // namespace sparsembed

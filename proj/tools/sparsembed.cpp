// sparsembed: command-line driver for the sparse embedding toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
// Every subcommand accepts --config FILE with plain key=value lines naming
// its long options (without the dashes). Command-line flags win over the
// config file, which wins over SPARSEMBED_THREADS (for --threads) and the
// built-in defaults.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sparsembed/sparsembed.hpp>

namespace {

namespace fs = std::filesystem;
using namespace sparsembed;

constexpr const char* kThreadsEnv = "SPARSEMBED_THREADS";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw DataError("cannot read \"" + path + "\": no such file");
}

void require_output(const std::string& path) {
  if (path.empty() || path == "-") return;
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec))
    throw DataError("cannot write \"" + path + "\": directory \"" + parent.string() + "\" does not exist");
}

std::ifstream open_input(const std::string& path) {
  require_input(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open \"" + path + "\"");
  return in;
}

// Outputs are rendered in memory and written once the command succeeded,
// so a failed run never leaves a truncated file behind.
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content) || !out.flush()) throw DataError("cannot write \"" + path + "\"");
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

EmbeddingMatrix load_embeddings(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_dense_embeddings(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

template <class Fn>
auto with_path(const std::string& path, Fn&& fn) {
  auto in = open_input(path);
  try {
    return fn(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::string> read_word_list(const std::string& path) {
  return with_path(path, [](std::istream& in) {
    std::vector<std::string> words;
    std::string line;
    std::size_t line_no = 0;
    while (io_detail::read_line(in, line, line_no)) {
      const auto w = io_detail::trim(line);
      if (!w.empty() && w.front() != '#') words.emplace_back(w);
    }
    if (words.empty()) throw DataError("word list is empty");
    return words;
  });
}

struct Common {
  std::string config;
  unsigned threads = 1;
  std::uint64_t seed = 42;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value file supplying defaults for this subcommand's options");
  sub->add_option("--threads", c.threads, std::string("Worker threads (default from ") + kThreadsEnv + ", else 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

// Fills options not given on the command line from the config file, then the
// thread count from the environment.
void apply_defaults(CLI::App* sub, Common& c) {
  if (!c.config.empty()) {
    require_input(c.config);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigINI().from_file(c.config);
    } catch (const CLI::ParseError& e) {
      throw UsageError(c.config + ": " + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "config") throw UsageError(c.config + ": nested config files are not supported");
      CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
      if (!opt) throw UsageError(c.config + ": unknown key \"" + item.name + "\" for " + sub->get_name());
      if (opt->count() > 0) continue;
      opt->add_result(item.inputs);
      opt->run_callback();
    }
  }
  CLI::Option* threads = sub->get_option("--threads");
  if (threads->count() == 0) {
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
      threads->add_result(std::string(env));
      threads->run_callback();
    }
  }
}

std::string fixed(double v, int precision) {
  std::string s;
  io_detail::append_fixed(s, v, precision);
  return s;
}

// ---------------------------------------------------------------------------

struct PrepArgs {
  Common common;
  std::string in, out;
  bool keep_punctuation = false, keep_numbers = false, keep_case = false;
};

void run_prep(const PrepArgs& a) {
  require_output(a.out);
  NormalizationRules rules{!a.keep_punctuation, !a.keep_numbers, !a.keep_case};
  auto in = open_input(a.in);
  std::string out, line;
  std::size_t line_no = 0;
  while (io_detail::read_line(in, line, line_no)) {
    out += normalize_text(line, rules);
    out.push_back('\n');
  }
  std::cerr << "prep: " << line_no << " lines normalized\n";
  emit(a.out, out);
}

struct SpowvArgs {
  Common common;
  std::string emb, out, checkpoint, trace;
  SpowvConfig cfg;
  double step = 0.0;
  int precision = 6;
};

void run_spowv(SpowvArgs& a, const CLI::App* sub) {
  require_input(a.emb);
  for (const auto* p : {&a.out, &a.checkpoint, &a.trace}) require_output(*p);
  a.cfg.seed = a.common.seed;
  a.cfg.threads = a.common.threads;
  if (sub->get_option("--ista-step")->count() > 0) a.cfg.ista_step_size = a.step;
  const auto x = load_embeddings(a.emb);
  try {
    a.cfg.validate(x.dim());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto result = spowv_fit(x, a.cfg);
  for (const auto& e : result.trace)
    std::cerr << "spowv: epoch " << e.epoch << " objective " << fixed(e.objective, 6) << " sparsity "
              << fixed(e.sparsity, 4) << "\n";
  std::ostringstream emb;
  write_embeddings(emb, spowv_embedding(x, result.codes), a.precision);
  emit(a.out, emb.str());
  if (!a.checkpoint.empty()) {
    std::ostringstream ck;
    write_spowv_checkpoint(ck, x, result, a.cfg);
    emit(a.checkpoint, ck.str());
  }
  if (!a.trace.empty()) {
    std::ostringstream tr;
    write_spowv_trace_csv(tr, result.trace);
    emit(a.trace, tr.str());
  }
}

struct SpineArgs {
  Common common;
  std::string emb, out, checkpoint, trace;
  SpineConfig cfg;
  std::string optimizer = "gd";
  int precision = 6;
};

SpineOptimizer parse_optimizer(const std::string& name) {
  if (name == "gd") return SpineOptimizer::gradient_descent;
  if (name == "adam") return SpineOptimizer::adam;
  throw UsageError("unknown optimizer \"" + name + "\" (expected gd or adam)");
}

void run_spine(SpineArgs& a) {
  require_input(a.emb);
  for (const auto* p : {&a.out, &a.checkpoint, &a.trace}) require_output(*p);
  a.cfg.seed = a.common.seed;
  a.cfg.threads = a.common.threads;
  a.cfg.optimizer = parse_optimizer(a.optimizer);
  try {
    a.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto x = load_embeddings(a.emb);
  if (a.cfg.batch_size > x.size())
    throw UsageError("batch size " + std::to_string(a.cfg.batch_size) + " exceeds vocabulary size " +
                     std::to_string(x.size()));
  const auto result = spine_train(x, a.cfg);
  for (const auto& e : result.trace)
    std::cerr << "spine: epoch " << e.epoch << " loss " << fixed(e.loss.total, 6) << " rl " << fixed(e.loss.rl, 6)
              << " asl " << fixed(e.loss.asl, 6) << " psl " << fixed(e.loss.psl, 6) << " sparsity "
              << fixed(e.mean_sparsity, 4) << "\n";
  std::ostringstream emb;
  write_embeddings(emb, spine_transform(result.model, x, a.cfg.threads), a.precision);
  emit(a.out, emb.str());
  if (!a.checkpoint.empty()) {
    std::ostringstream ck;
    write_spine_checkpoint(ck, result.model);
    emit(a.checkpoint, ck.str());
  }
  if (!a.trace.empty()) {
    std::ostringstream tr;
    write_spine_trace_csv(tr, result.trace);
    emit(a.trace, tr.str());
  }
}

// "name=path" or a bare path named after its stem.
std::pair<std::string, std::string> named_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {stem(spec), spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

struct IntrinsicArgs {
  Common common;
  std::string emb, out;
  std::vector<std::string> benches;
  double scale = 10.0;
};

void run_intrinsic(const IntrinsicArgs& a) {
  require_input(a.emb);
  std::vector<std::pair<std::string, std::string>> benches;
  for (const auto& b : a.benches) benches.push_back(named_path(b));
  for (const auto& [_, p] : benches) require_input(p);
  require_output(a.out);
  const auto emb = load_embeddings(a.emb);
  std::vector<IntrinsicResult> results;
  for (const auto& [name, path] : benches) {
    const auto bench =
        with_path(path, [&](std::istream& in) { return parse_similarity_benchmark(in, a.scale, name); });
    results.push_back(evaluate_benchmark(emb, bench));
    const auto& r = results.back();
    std::cerr << "eval-intrinsic: " << r.benchmark << " rho " << fixed(r.rho, 4) << " pairs " << r.pairs_used << "/"
              << bench.pairs.size() << "\n";
  }
  std::ostringstream out;
  write_intrinsic_csv(out, results);
  emit(a.out, out.str());
}

struct InterpretArgs {
  Common common;
  std::string emb, categories, out, sweep_out;
  std::size_t gamma = 1, sweep = 5, min_size = 5, max_size = 250;
};

void run_interpret(const InterpretArgs& a) {
  require_input(a.emb);
  require_input(a.categories);
  require_output(a.out);
  require_output(a.sweep_out);
  const auto emb = load_embeddings(a.emb);
  const CategoryBounds bounds{a.min_size, a.max_size};
  const auto cats =
      with_path(a.categories, [&](std::istream& in) { return parse_category_dataset(in, &emb, bounds); });
  std::size_t largest = 0;
  for (const auto& [_, words] : cats.groups) largest = std::max(largest, words.size());
  if (a.gamma * largest > emb.size())
    throw UsageError("gamma " + std::to_string(a.gamma) + " times the largest category (" + std::to_string(largest) +
                     " words) exceeds the vocabulary size " + std::to_string(emb.size()));
  std::cerr << "eval-interpret: " << cats.groups.size() << " categories kept, " << cats.discarded << " discarded\n";

  const auto result = interpretability_score(emb, cats, a.gamma, a.common.threads);
  std::cerr << "eval-interpret: IS " << fixed(result.overall, 4) << " (gamma " << a.gamma << ")\n";
  std::ostringstream out;
  write_interpretability_csv(out, result);
  emit(a.out, out.str());

  // Sensitivity to gamma: every admissible gamma up to the requested sweep.
  std::string sweep = "gamma,IS\n";
  for (std::size_t g = 1; g <= a.sweep && g * largest <= emb.size(); ++g) {
    const double is = g == a.gamma ? result.overall : interpretability_score(emb, cats, g, a.common.threads).overall;
    std::cerr << "eval-interpret: gamma " << g << " IS " << fixed(is, 4) << "\n";
    sweep += std::to_string(g) + "," + fixed(is, 6) + "\n";
  }
  if (!a.sweep_out.empty()) emit(a.sweep_out, sweep);
}

struct ExtrinsicArgs {
  Common common;
  std::vector<std::string> embs, tasks;
  std::string out;
  std::size_t folds = 10;
  ClassifierConfig cfg;
};

void run_extrinsic(ExtrinsicArgs& a) {
  std::vector<std::pair<std::string, std::string>> embs, tasks;
  for (const auto& e : a.embs) embs.push_back(named_path(e));
  for (const auto& t : a.tasks) tasks.push_back(named_path(t));
  for (const auto& [_, p] : embs) require_input(p);
  for (const auto& [_, p] : tasks) require_input(p);
  require_output(a.out);
  if (a.folds < 2) throw UsageError("--folds must be >= 2");
  a.cfg.seed = a.common.seed;

  std::vector<LabeledCorpus> corpora;
  for (const auto& [_, p] : tasks)
    corpora.push_back(with_path(p, [](std::istream& in) { return parse_labeled_sentences(in); }));
  std::vector<std::string> variant_names, task_names;
  for (const auto& [n, _] : tasks) task_names.push_back(n);
  std::vector<std::vector<double>> acc;
  for (const auto& [name, path] : embs) {
    const auto emb = load_embeddings(path);
    variant_names.push_back(name);
    acc.emplace_back();
    for (std::size_t t = 0; t < corpora.size(); ++t) {
      const auto report = cross_validate(emb, corpora[t], a.folds, a.common.seed, a.cfg, a.common.threads);
      acc.back().push_back(report.mean_accuracy);
      std::cerr << "eval-extrinsic: " << name << " on " << task_names[t] << " accuracy "
                << fixed(report.mean_accuracy, 4) << " (" << report.all_oov_sentences << " all-OOV sentences)\n";
    }
  }
  std::ostringstream out;
  write_extrinsic_csv(out, variant_names, task_names, acc);
  emit(a.out, out.str());
}

struct TopWordsArgs {
  Common common;
  std::string emb, words_file, out;
  std::vector<std::string> words;
  std::size_t top = 5;
};

void run_top_words(const TopWordsArgs& a) {
  require_input(a.emb);
  if (!a.words_file.empty()) require_input(a.words_file);
  require_output(a.out);
  auto words = a.words;
  if (!a.words_file.empty())
    for (auto& w : read_word_list(a.words_file)) words.push_back(std::move(w));
  if (words.empty()) throw UsageError("give probe words with --word or --words-file");
  const auto emb = load_embeddings(a.emb);
  std::vector<std::pair<std::string, DominatingDimension>> rows;
  for (const auto& w : words) rows.emplace_back(w, dominating_dimension(emb, w, a.top));
  std::ostringstream out;
  write_top_words_report(out, rows);
  emit(a.out, out.str());
}

struct IntrusionArgs {
  Common common;
  std::string emb, out;
  std::size_t count = 100, retries = 1000;
};

void run_intrusion(const IntrusionArgs& a) {
  require_input(a.emb);
  require_output(a.out);
  const auto emb = load_embeddings(a.emb);
  SeededRng rng(a.common.seed);
  const auto questions = generate_intrusion_questions(emb, a.count, rng, a.retries);
  std::ostringstream out;
  write_intrusion_questions(out, questions);
  emit(a.out, out.str());
}

struct HeatmapArgs {
  Common common;
  std::vector<std::string> embs, words;
  std::string csv, svg;
  std::size_t group = 3;
};

void run_heatmap(const HeatmapArgs& a) {
  std::vector<std::pair<std::string, std::string>> embs;
  for (const auto& e : a.embs) embs.push_back(named_path(e));
  for (const auto& [_, p] : embs) require_input(p);
  require_output(a.csv);
  require_output(a.svg);
  if (a.csv.empty() && a.svg.empty()) throw UsageError("give --csv and/or --svg");
  std::vector<HeatmapSpec> specs;
  std::vector<std::string> names;
  for (const auto& [name, path] : embs) {
    specs.push_back(build_heatmap(load_embeddings(path), a.words, a.group));
    names.push_back(name);
  }
  if (!a.csv.empty()) {
    std::ostringstream out;
    write_heatmap_csv(out, specs, names);
    emit(a.csv, out.str());
  }
  if (!a.svg.empty()) {
    std::ostringstream out;
    write_heatmap_svg(out, specs, names);
    emit(a.svg, out.str());
  }
}

// --- tune ------------------------------------------------------------------

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v.front() == '-') throw UsageError("grid key " + key + ": bad count \"" + v + "\"");
  return static_cast<std::size_t>(n);
}

double to_real(const std::string& key, const std::string& v) {
  const auto r = io_detail::parse_real(v);
  if (!r) throw UsageError("grid key " + key + ": bad number \"" + v + "\"");
  return *r;
}

void set_param(SpowvConfig& c, const std::string& k, const std::string& v) {
  if (k == "k") c.dim = to_count(k, v);
  else if (k == "lambda") c.lambda = to_real(k, v);
  else if (k == "tau") c.tau = to_real(k, v);
  else if (k == "ista-steps") c.ista_steps = to_count(k, v);
  else if (k == "ista-step") c.ista_step_size = to_real(k, v);
  else if (k == "dict-rate") c.dict_learning_rate = to_real(k, v);
  else if (k == "epochs") c.epochs = to_count(k, v);
  else if (k == "init-scale") c.init_scale = to_real(k, v);
  else throw UsageError("unknown spowv grid key \"" + k + "\"");
}

void set_param(SpineConfig& c, const std::string& k, const std::string& v) {
  if (k == "k") c.hidden = to_count(k, v);
  else if (k == "lambda1") c.lambda1 = to_real(k, v);
  else if (k == "lambda2") c.lambda2 = to_real(k, v);
  else if (k == "lambda3") c.lambda3 = to_real(k, v);
  else if (k == "rho") c.rho_star = to_real(k, v);
  else if (k == "lr") c.learning_rate = to_real(k, v);
  else if (k == "epochs") c.epochs = to_count(k, v);
  else if (k == "batch") c.batch_size = to_count(k, v);
  else if (k == "optimizer") c.optimizer = parse_optimizer(v);
  else throw UsageError("unknown spine grid key \"" + k + "\"");
}

struct TuneArgs {
  Common common;
  std::string trainer = "spowv", emb, dense, probes_file, out;
  std::vector<std::string> grid;
  std::size_t probe_count = 0, top = 10;
};

void run_tune(const TuneArgs& a) {
  require_input(a.emb);
  if (!a.dense.empty()) require_input(a.dense);
  if (!a.probes_file.empty()) require_input(a.probes_file);
  require_output(a.out);
  if (a.trainer != "spowv" && a.trainer != "spine") throw UsageError("--trainer must be spowv or spine");

  // Cartesian product of key=v1,v2,... axes, last axis varying fastest.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& g : a.grid) {
    const auto eq = g.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("grid entry \"" + g + "\" is not key=v1,v2,...");
    std::vector<std::string> values;
    std::stringstream ss(g.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');)
      if (!v.empty()) values.push_back(v);
    if (values.empty()) throw UsageError("grid entry \"" + g + "\" has no values");
    axes.emplace_back(g.substr(0, eq), std::move(values));
  }
  std::vector<std::vector<std::pair<std::string, std::string>>> points{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        next.push_back(p);
        next.back().emplace_back(key, v);
      }
    points = std::move(next);
  }

  std::vector<TrainerConfig> grid;
  std::vector<std::string> labels;
  for (const auto& p : points) {
    std::string label;
    if (a.trainer == "spowv") {
      SpowvConfig c;
      c.seed = a.common.seed;
      for (const auto& [k, v] : p) set_param(c, k, v);
      grid.emplace_back(c);
    } else {
      SpineConfig c;
      c.seed = a.common.seed;
      for (const auto& [k, v] : p) set_param(c, k, v);
      grid.emplace_back(c);
    }
    for (const auto& [k, v] : p) label += (label.empty() ? "" : ";") + k + "=" + v;
    labels.push_back(label.empty() ? "defaults" : label);
  }

  const auto x = load_embeddings(a.emb);
  const auto dense = a.dense.empty() ? x : load_embeddings(a.dense);
  std::vector<std::string> probes;
  if (!a.probes_file.empty()) probes = read_word_list(a.probes_file);
  for (std::size_t i = 0; i < a.probe_count && i < x.size(); ++i) probes.push_back(x.words()[i]);
  if (probes.empty()) throw UsageError("give probe words with --probes or --probe-count");
  for (const auto& p : probes)
    if (!x.contains(p) || !dense.contains(p)) throw DataError("probe \"" + p + "\" is missing from a vocabulary");

  const auto records = hyperparam_search(grid, x, dense, probes, a.top, a.common.threads);
  std::string out = "rank,grid_index,config,score,status\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    out += std::to_string(r + 1) + "," + std::to_string(rec.grid_index) + "," + labels[rec.grid_index] + ",";
    out += rec.failed ? std::string("nan") : fixed(rec.score, 6);
    out += rec.failed ? ",failed\n" : ",ok\n";
    if (rec.failed) std::cerr << "tune: " << labels[rec.grid_index] << " failed: " << rec.error << "\n";
  }
  emit(a.out, out);
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string out_dir;
  PlantedSpec spec;
  std::size_t pairs = 200, sentences = 500, classes = 5, lines = 200;
};

void run_synth(SynthArgs& a) {
  std::error_code ec;
  if (!fs::is_directory(a.out_dir, ec)) throw DataError("output directory \"" + a.out_dir + "\" does not exist");
  if (a.classes < 2 || a.classes > a.spec.groups) throw UsageError("--classes must lie in [2, groups]");
  a.spec.seed = a.common.seed;
  const auto fx = make_planted_embedding(a.spec);
  const fs::path dir(a.out_dir);

  std::ostringstream dense;
  write_embeddings(dense, fx.dense, 6);
  emit((dir / "dense.vec").string(), dense.str());

  std::string cats;
  for (const auto& [name, words] : fx.categories.groups)
    for (const auto& w : words) cats += name + "\t" + w + "\n";
  emit((dir / "categories.tsv").string(), cats);

  std::string sim;
  for (const auto& p : make_similarity_benchmark(fx, a.pairs, 0.5, a.common.seed).pairs)
    sim += p.first + "\t" + p.second + "\t" + fixed(p.score, 4) + "\n";
  emit((dir / "similarity.tsv").string(), sim);

  std::string labeled;
  for (const auto& s : make_labeled_corpus(fx, a.classes, a.sentences, 3, 2, a.common.seed).samples) {
    labeled += s.label + "\t";
    for (std::size_t i = 0; i < s.tokens.size(); ++i) labeled += (i ? " " : "") + s.tokens[i];
    labeled += "\n";
  }
  emit((dir / "labeled.tsv").string(), labeled);

  std::string raw;
  for (const auto& l : make_raw_corpus(fx, a.lines, a.common.seed)) raw += l + "\n";
  emit((dir / "raw.txt").string(), raw);
  std::cerr << "synth: wrote dense.vec, categories.tsv, similarity.tsv, labeled.tsv, raw.txt to " << a.out_dir
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse interpretable word embeddings: training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sparsembed 0.1.0");
  std::map<CLI::App*, std::pair<Common*, std::function<void()>>> handlers;

  PrepArgs prep;
  auto* s_prep = app.add_subcommand("prep", "Normalize raw text: punctuation, digit runs, case");
  add_common(s_prep, prep.common);
  s_prep->add_option("--in", prep.in, "Raw text file")->required();
  s_prep->add_option("--out", prep.out, "Normalized output (default stdout)");
  s_prep->add_flag("--keep-punctuation", prep.keep_punctuation, "Do not strip punctuation and symbols");
  s_prep->add_flag("--keep-numbers", prep.keep_numbers, "Do not collapse digit runs to 0");
  s_prep->add_flag("--keep-case", prep.keep_case, "Do not lowercase");
  handlers[s_prep] = {&prep.common, [&] { run_prep(prep); }};

  SpowvArgs spowv;
  auto* s_spowv = app.add_subcommand("spowv", "Sparse overcomplete vectors by dictionary learning");
  add_common(s_spowv, spowv.common);
  s_spowv->add_option("--emb", spowv.emb, "Dense input embeddings")->required();
  s_spowv->add_option("--out", spowv.out, "Sparse output embeddings")->required();
  s_spowv->add_option("--k", spowv.cfg.dim, "Sparse dimension K (> input dimension)")->capture_default_str();
  s_spowv->add_option("--lambda", spowv.cfg.lambda, "l1 weight on codes")->capture_default_str();
  s_spowv->add_option("--tau", spowv.cfg.tau, "Ridge weight on the dictionary")->capture_default_str();
  s_spowv->add_option("--ista-steps", spowv.cfg.ista_steps, "Proximal steps per row per epoch")->capture_default_str();
  s_spowv->add_option("--ista-step", spowv.step, "Proximal step size (default: 1/(2 sigma_max))");
  s_spowv->add_option("--dict-rate", spowv.cfg.dict_learning_rate, "Dictionary learning rate")->capture_default_str();
  s_spowv->add_option("--epochs", spowv.cfg.epochs, "Alternation epochs")->capture_default_str();
  s_spowv->add_option("--init-scale", spowv.cfg.init_scale, "Dictionary init range")->capture_default_str();
  s_spowv->add_option("--checkpoint", spowv.checkpoint, "Write D and A checkpoint");
  s_spowv->add_option("--trace", spowv.trace, "Write objective trace CSV");
  s_spowv->add_option("--precision", spowv.precision, "Decimals in output")->check(CLI::Range(1, 17));
  handlers[s_spowv] = {&spowv.common, [&] { run_spowv(spowv, s_spowv); }};

  SpineArgs spine;
  auto* s_spine = app.add_subcommand("spine", "Sparse embeddings from a capped-activation autoencoder");
  add_common(s_spine, spine.common);
  s_spine->add_option("--emb", spine.emb, "Dense input embeddings")->required();
  s_spine->add_option("--out", spine.out, "Sparse output embeddings")->required();
  s_spine->add_option("--k", spine.cfg.hidden, "Hidden units")->capture_default_str();
  s_spine->add_option("--lambda1", spine.cfg.lambda1, "Reconstruction weight")->capture_default_str();
  s_spine->add_option("--lambda2", spine.cfg.lambda2, "Average sparsity weight")->capture_default_str();
  s_spine->add_option("--lambda3", spine.cfg.lambda3, "Partial sparsity weight")->capture_default_str();
  s_spine->add_option("--rho", spine.cfg.rho_star, "Desired mean activation")->capture_default_str();
  s_spine->add_option("--lr", spine.cfg.learning_rate, "Learning rate")->capture_default_str();
  s_spine->add_option("--epochs", spine.cfg.epochs, "Epochs")->capture_default_str();
  s_spine->add_option("--batch", spine.cfg.batch_size, "Mini-batch size")->capture_default_str();
  s_spine->add_option("--optimizer", spine.optimizer, "gd or adam")->capture_default_str();
  s_spine->add_option("--divergence-tolerance", spine.cfg.divergence_tolerance,
                      "Relative epoch-loss growth that counts toward divergence")
      ->capture_default_str();
  s_spine->add_option("--checkpoint", spine.checkpoint, "Write model checkpoint");
  s_spine->add_option("--trace", spine.trace, "Write loss trace CSV");
  s_spine->add_option("--precision", spine.precision, "Decimals in output")->check(CLI::Range(1, 17));
  handlers[s_spine] = {&spine.common, [&] { run_spine(spine); }};

  IntrinsicArgs intrinsic;
  auto* s_intr = app.add_subcommand("eval-intrinsic", "Spearman correlation with similarity benchmarks");
  add_common(s_intr, intrinsic.common);
  s_intr->add_option("--emb", intrinsic.emb, "Embeddings to evaluate")->required();
  s_intr->add_option("--bench", intrinsic.benches, "Benchmark word1<TAB>word2<TAB>score as [name=]path (repeatable)")
      ->required();
  s_intr->add_option("--scale", intrinsic.scale, "Maximum benchmark score")->capture_default_str();
  s_intr->add_option("--out", intrinsic.out, "Results CSV (default stdout)");
  handlers[s_intr] = {&intrinsic.common, [&] { run_intrinsic(intrinsic); }};

  InterpretArgs interp;
  auto* s_interp = app.add_subcommand("eval-interpret", "Category-based interpretability score");
  add_common(s_interp, interp.common);
  s_interp->add_option("--emb", interp.emb, "Embeddings to evaluate")->required();
  s_interp->add_option("--categories", interp.categories, "category<TAB>word file")->required();
  s_interp->add_option("--gamma", interp.gamma, "Window strictness")->capture_default_str()->check(CLI::PositiveNumber);
  s_interp->add_option("--gamma-sweep", interp.sweep, "Also report IS for gamma = 1..N")->capture_default_str();
  s_interp->add_option("--sweep-out", interp.sweep_out, "Write the gamma sweep CSV");
  s_interp->add_option("--min-size", interp.min_size, "Smallest category kept")->capture_default_str();
  s_interp->add_option("--max-size", interp.max_size, "Largest category kept")->capture_default_str();
  s_interp->add_option("--out", interp.out, "Per-dimension CSV (default stdout)");
  handlers[s_interp] = {&interp.common, [&] { run_interpret(interp); }};

  ExtrinsicArgs extr;
  auto* s_extr = app.add_subcommand("eval-extrinsic", "Cross-validated sentence classification");
  add_common(s_extr, extr.common);
  s_extr->add_option("--emb", extr.embs, "Embeddings as [name=]path (repeatable)")->required();
  s_extr->add_option("--task", extr.tasks, "label<TAB>sentence file as [name=]path (repeatable)")->required();
  s_extr->add_option("--folds", extr.folds, "Cross-validation folds")->capture_default_str();
  s_extr->add_option("--l2", extr.cfg.l2, "L2 weight")->capture_default_str();
  s_extr->add_option("--lr", extr.cfg.learning_rate, "Learning rate cap")->capture_default_str();
  s_extr->add_option("--epochs", extr.cfg.epochs, "Gradient descent epochs")->capture_default_str();
  s_extr->add_option("--out", extr.out, "Accuracy CSV (default stdout)");
  handlers[s_extr] = {&extr.common, [&] { run_extrinsic(extr); }};

  TopWordsArgs topw;
  auto* s_top = app.add_subcommand("top-words", "Dominating dimension and its top words per probe word");
  add_common(s_top, topw.common);
  s_top->add_option("--emb", topw.emb, "Embeddings")->required();
  s_top->add_option("--word", topw.words, "Probe word (repeatable)");
  s_top->add_option("--words-file", topw.words_file, "Probe words, one per line");
  s_top->add_option("--top", topw.top, "Words per dimension")->capture_default_str()->check(CLI::PositiveNumber);
  s_top->add_option("--out", topw.out, "Report CSV (default stdout)");
  handlers[s_top] = {&topw.common, [&] { run_top_words(topw); }};

  IntrusionArgs intr;
  auto* s_intrusion = app.add_subcommand("intrusion", "Generate word-intrusion questions");
  add_common(s_intrusion, intr.common);
  s_intrusion->add_option("--emb", intr.emb, "Embeddings")->required();
  s_intrusion->add_option("--count", intr.count, "Questions")->capture_default_str();
  s_intrusion->add_option("--max-retries", intr.retries, "Redraws per question")->capture_default_str();
  s_intrusion->add_option("--out", intr.out, "Question file (default stdout)");
  handlers[s_intrusion] = {&intr.common, [&] { run_intrusion(intr); }};

  HeatmapArgs heat;
  auto* s_heat = app.add_subcommand("heatmap", "Sorted-dimension sign heatmap");
  add_common(s_heat, heat.common);
  s_heat->add_option("--emb", heat.embs, "Embeddings as [name=]path (repeatable)")->required();
  s_heat->add_option("--words", heat.words, "Words, comma separated; the sort group comes first")
      ->required()
      ->delimiter(',');
  s_heat->add_option("--group-size", heat.group, "Words whose mean orders the dimensions")->capture_default_str();
  s_heat->add_option("--csv", heat.csv, "CSV output");
  s_heat->add_option("--svg", heat.svg, "SVG output");
  handlers[s_heat] = {&heat.common, [&] { run_heatmap(heat); }};

  TuneArgs tune;
  auto* s_tune = app.add_subcommand("tune", "Rank trainer configurations by coherence");
  add_common(s_tune, tune.common);
  s_tune->add_option("--trainer", tune.trainer, "spowv or spine")->capture_default_str();
  s_tune->add_option("--emb", tune.emb, "Training input embeddings")->required();
  s_tune->add_option("--dense", tune.dense, "Dense space for coherence (default: --emb)");
  s_tune->add_option("--grid", tune.grid, "Axis key=v1,v2,... (repeatable; keys are the trainer's option names)");
  s_tune->add_option("--probes", tune.probes_file, "Probe words, one per line");
  s_tune->add_option("--probe-count", tune.probe_count, "Use the first N vocabulary words as probes");
  s_tune->add_option("--top", tune.top, "Top words per active dimension")->capture_default_str();
  s_tune->add_option("--out", tune.out, "Ranking CSV (default stdout)");
  handlers[s_tune] = {&tune.common, [&] { run_tune(tune); }};

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Write a planted-group fixture (embeddings, categories, corpora)");
  add_common(s_synth, synth.common);
  s_synth->add_option("--out-dir", synth.out_dir, "Existing output directory")->required();
  s_synth->add_option("--groups", synth.spec.groups, "Planted groups")->capture_default_str();
  s_synth->add_option("--group-size", synth.spec.group_size, "Words per group")->capture_default_str();
  s_synth->add_option("--fillers", synth.spec.fillers, "Unrelated filler words")->capture_default_str();
  s_synth->add_option("--dim", synth.spec.dim, "Dense dimension")->capture_default_str();
  s_synth->add_option("--noise", synth.spec.noise, "Member noise scale")->capture_default_str();
  s_synth->add_option("--pairs", synth.pairs, "Similarity pairs")->capture_default_str();
  s_synth->add_option("--sentences", synth.sentences, "Labeled sentences")->capture_default_str();
  s_synth->add_option("--classes", synth.classes, "Sentence classes")->capture_default_str();
  s_synth->add_option("--lines", synth.lines, "Raw corpus lines")->capture_default_str();
  handlers[s_synth] = {&synth.common, [&] { run_synth(synth); }};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto& [common, run] = handlers.at(sub);
  try {
    apply_defaults(sub, *common);
    run();
  } catch (const CLI::ParseError& e) {
    std::cerr << "sparsembed " << sub->get_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "sparsembed " << sub->get_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "sparsembed " << sub->get_name() << ": diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "sparsembed " << sub->get_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sparsembed " << sub->get_name() << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}

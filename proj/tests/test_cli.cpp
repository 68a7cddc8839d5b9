#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sparsembed/sparsembed.hpp>

#include "oracles.hpp"

using namespace sparsembed;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("sparsembed_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "env -u SPARSEMBED_THREADS " + env + " " + SPARSEMBED_CLI + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void synth() const { ASSERT_EQ(run("synth --out-dir " + dir_.string() + " --seed 7").code, 0); }

  fs::path dir_;
};

EmbeddingMatrix load(const std::string& p) {
  std::ifstream in(p);
  return parse_dense_embeddings(in);
}

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("spowv --emb x.vec").code, 1);  // --out missing
  EXPECT_EQ(run("spine --emb x.vec --out y.vec --bogus 3").code, 1);
  EXPECT_EQ(run("eval-interpret --emb a --categories b --gamma 0").code, 1);
}

TEST_F(CliTest, MissingInputIsDataErrorNamingThePath) {
  const auto missing = path("absent.vec");
  const auto r = run("spowv --emb " + missing + " --out " + path("o.vec"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("o.vec")));
}

TEST_F(CliTest, MalformedInputIsDataErrorWithLine) {
  spit(path("bad.vec"), "2 2\na 1 0\nb 1 oops\n");
  const auto r = run("spine --emb " + path("bad.vec") + " --out " + path("o.vec"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(path("bad.vec")), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("o.vec")));
}

TEST_F(CliTest, UnwritableOutputIsDataError) {
  synth();
  const auto r = run("spine --emb " + path("dense.vec") + " --out " + path("no/such/dir/o.vec") + " --epochs 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no/such/dir"), std::string::npos) << r.err;
}

TEST_F(CliTest, DivergenceExitCode) {
  synth();
  const auto r = run("spine --emb " + path("dense.vec") + " --out " + path("o.vec") +
                     " --optimizer gd --lr 1000 --epochs 50 --lambda2 0 --lambda3 0");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_FALSE(fs::exists(path("o.vec")));
}

TEST_F(CliTest, ConfigPrecedence) {
  synth();
  const std::string base = "spine --emb " + path("dense.vec") + " --out " + path("o.vec") + " --epochs 2";
  spit(path("run.cfg"), "# spine settings\nk = 14\n");
  ASSERT_EQ(run(base + " --config " + path("run.cfg")).code, 0);
  EXPECT_EQ(load(path("o.vec")).dim(), 14u);
  ASSERT_EQ(run(base + " --config " + path("run.cfg") + " --k 12").code, 0);
  EXPECT_EQ(load(path("o.vec")).dim(), 12u);

  // An invalid thread count from the environment only matters when neither
  // the command line nor the config file supplies one.
  EXPECT_EQ(run(base, "SPARSEMBED_THREADS=0").code, 1);
  EXPECT_EQ(run(base + " --threads 2", "SPARSEMBED_THREADS=0").code, 0);
  spit(path("threads.cfg"), "threads = 2\n");
  EXPECT_EQ(run(base + " --config " + path("threads.cfg"), "SPARSEMBED_THREADS=0").code, 0);
  spit(path("bad_threads.cfg"), "threads = 0\n");
  EXPECT_EQ(run(base + " --config " + path("bad_threads.cfg")).code, 1);
  EXPECT_EQ(run(base + " --config " + path("bad_threads.cfg") + " --threads 3").code, 0);
}

TEST_F(CliTest, ConfigErrors) {
  synth();
  const std::string base = "spine --emb " + path("dense.vec") + " --out " + path("o.vec") + " --epochs 2";
  spit(path("unknown.cfg"), "bogus = 1\n");
  const auto r = run(base + " --config " + path("unknown.cfg"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bogus"), std::string::npos) << r.err;
  EXPECT_EQ(run(base + " --config " + path("absent.cfg")).code, 2);
}

TEST_F(CliTest, InputsAreNotModified) {
  synth();
  std::map<std::string, std::string> before;
  for (const auto& f : {"dense.vec", "categories.tsv", "similarity.tsv", "labeled.tsv", "raw.txt"})
    before[f] = slurp(path(f));
  ASSERT_EQ(run("prep --in " + path("raw.txt") + " --out " + path("clean.txt")).code, 0);
  ASSERT_EQ(run("spowv --emb " + path("dense.vec") + " --out " + path("s.vec") + " --k 20 --epochs 3").code, 0);
  ASSERT_EQ(run("eval-intrinsic --emb " + path("s.vec") + " --bench " + path("similarity.tsv")).code, 0);
  ASSERT_EQ(run("eval-interpret --emb " + path("dense.vec") + " --categories " + path("categories.tsv")).code, 0);
  ASSERT_EQ(run("eval-extrinsic --emb " + path("dense.vec") + " --task " + path("labeled.tsv") + " --epochs 20").code,
            0);
  for (const auto& [f, text] : before) EXPECT_EQ(slurp(path(f)), text) << f;
}

TEST_F(CliTest, PrepMatchesLibrary) {
  spit(path("raw.txt"), "Hello, World 2024!\nMixed CASE... 7 up\n");
  const auto r = run("prep --in " + path("raw.txt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, normalize_text("Hello, World 2024!") + "\n" + normalize_text("Mixed CASE... 7 up") + "\n");
  EXPECT_EQ(r.out, oracle::normalize_ascii("Hello, World 2024!") + "\n" + oracle::normalize_ascii("Mixed CASE... 7 up") +
                       "\n");
}

TEST_F(CliTest, InterpretMatchesBruteForceOracle) {
  synth();
  const auto r = run("eval-interpret --emb " + path("dense.vec") + " --categories " + path("categories.tsv") +
                     " --out " + path("is.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto emb = load(path("dense.vec"));
  std::ifstream cats_in(path("categories.tsv"));
  const auto cats = parse_category_dataset(cats_in, &emb);

  std::ostringstream expected;
  write_interpretability_csv(expected, interpretability_score(emb, cats, 1));
  EXPECT_EQ(slurp(path("is.csv")), expected.str());

  std::istringstream csv(slurp(path("is.csv")));
  std::string line;
  std::getline(csv, line);
  double sum = 0.0;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    sum += std::stod(line.substr(a + 1, b - a - 1));
    ++rows;
  }
  ASSERT_EQ(rows, emb.dim());
  const double oracle_is = oracle::interpretability(emb, cats.groups, 1);
  EXPECT_NEAR(sum / static_cast<double>(rows), oracle_is, 1e-6);
}

TEST_F(CliTest, SeededRunsAreByteIdentical) {
  synth();
  const std::string cmd = "spowv --emb " + path("dense.vec") + " --k 20 --epochs 5 --out ";
  ASSERT_EQ(run(cmd + path("a.vec") + " --seed 3").code, 0);
  ASSERT_EQ(run(cmd + path("b.vec") + " --seed 3 --threads 4").code, 0);
  EXPECT_EQ(slurp(path("a.vec")), slurp(path("b.vec")));
  ASSERT_EQ(run(cmd + path("c.vec") + " --seed 4").code, 0);
  EXPECT_NE(slurp(path("a.vec")), slurp(path("c.vec")));
}

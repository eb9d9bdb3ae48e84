#include "cli.hpp"

#include <filesystem>
#include <initializer_list>
#include <sstream>

#include "doctest.h"
#include "natlog/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace natlog;

namespace {

struct Invocation {
  int code = -1;
  std::string out, err;
};

Invocation invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"natlog"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("natlog_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("gradcheck passes for every variant") {
  const auto r = invoke({"gradcheck", "--seed", "3"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("ntn+transform") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("bad arguments are config errors") {
  CHECK(invoke({"--no-such-flag", "run"}).code == cli::kConfigError);
  CHECK(invoke({}).code == cli::kConfigError);
  CHECK(invoke({"--model", "rnn", "--runs", "1", "--num-terms", "5", "run"}).code == cli::kConfigError);
  CHECK(invoke({"--transform", "maybe", "run"}).code == cli::kConfigError);
  CHECK(invoke({"wordnet-extract"}).code == cli::kConfigError);
}

TEST_CASE("closure answers queries") {
  const auto dir = scratch("closure");
  write_file(dir / "chain.tsv", "a\tb\t>\nb\tc\t>\n");
  write_file(dir / "cover.tsv", "b\tc\tv\nc\te\t>\n");
  const auto chain = (dir / "chain.tsv").string();
  const auto cover = (dir / "cover.tsv").string();

  auto r = invoke({"closure", "--train", chain, "--query", "a", "c"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "a\tc\t>\n");
  CHECK(invoke({"closure", "--train", chain, "--query", "c", "a"}).out == "c\ta\t<\n");
  CHECK(invoke({"closure", "--train", chain, "--query", "b", "b"}).out == "b\tb\t=\n");
  CHECK(invoke({"closure", "--train", cover, "--query", "b", "e"}).out == "b\te\tunprovable\n");
  CHECK(invoke({"closure", "--train", chain, "--query", "a", "zebra"}).code == cli::kConfigError);
  CHECK(invoke({"closure", "--train", (dir / "missing.tsv").string(), "--query", "a", "b"}).code == cli::kIoError);
  write_file(dir / "bad.tsv", "a\tb\n");
  CHECK(invoke({"closure", "--train", (dir / "bad.tsv").string(), "--query", "a", "b"}).code == cli::kIoError);
  fs::remove_all(dir);
}

TEST_CASE("gen-data writes one directory per run and reads back for run") {
  const auto dir = scratch("gen");
  const auto data = (dir / "data").string();
  CHECK(invoke({"--runs", "2", "--num-terms", "10", "--out-dir", data, "gen-data"}).code == cli::kOk);
  CHECK(fs::exists(dir / "data" / "run_1" / "test_unprovable.tsv"));
  const auto out = (dir / "out").string();
  const auto r = invoke({"--runs", "2", "--num-terms", "10", "--epochs", "3", "--data-dir", data, "--out-dir", out,
                         "--save-models", "run"});
  CHECK(r.code == cli::kOk);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "models" / "ntn_run_1.model"));
  fs::remove_all(dir);
}

TEST_CASE("config file values apply and flags override them") {
  const auto dir = scratch("config");
  write_file(dir / "c.toml", "# comment\nseed = 4\nruns = 1\nnum-terms = 9\nout-dir = \"" + (dir / "a").string() + "\"\n");
  const auto cfg = (dir / "c.toml").string();
  CHECK(invoke({"--config", cfg, "gen-data"}).code == cli::kOk);
  std::istringstream meta_a(read_file(dir / "a" / "run_0" / "meta"));
  CHECK(read_meta(meta_a).at("seed") == "4");
  CHECK(invoke({"--config", cfg, "--seed", "6", "--out-dir", (dir / "b").string(), "gen-data"}).code == cli::kOk);
  std::istringstream meta_b(read_file(dir / "b" / "run_0" / "meta"));
  const auto mb = read_meta(meta_b);
  CHECK(mb.at("seed") == "6");
  CHECK(mb.at("num_terms") == "9");
  CHECK(invoke({"--config", (dir / "absent.toml").string(), "gen-data"}).code == cli::kConfigError);
  fs::remove_all(dir);
}

TEST_CASE("divergence and degenerate-only runs have their own exit codes") {
  const auto dir = scratch("codes");
  CHECK(invoke({"--runs", "1", "--num-terms", "12", "--epochs", "3", "--lr", "1e100", "--nonlinearity", "leaky_relu",
                "--out-dir", (dir / "d").string(), "run"})
            .code == cli::kDivergence);
  CHECK(invoke({"--runs", "2", "--num-terms", "12", "--epochs", "1", "--degenerate-share", "0.01", "--out-dir",
                (dir / "g").string(), "run"})
            .code == cli::kDegenerateOnly);
  const auto agg = read_file(dir / "g" / "aggregate.csv");
  CHECK(agg.find("ntn,all,NA,NA,2,") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("runs are byte-identical across repeats and thread counts") {
  const auto dir = scratch("determinism");
  auto run = [&](const std::string& name, const std::string& threads) {
    const auto out = (dir / name).string();
    CHECK(invoke({"--runs", "3", "--num-terms", "12", "--epochs", "4", "--seed", "21", "--threads", threads,
                  "--out-dir", out, "run"})
              .code == cli::kOk);
    return read_file(dir / name / "metrics.csv") + read_file(dir / name / "aggregate.csv");
  };
  const auto a = run("a", "1");
  CHECK(run("b", "1") == a);
  CHECK(run("c", "3") == a);
  fs::remove_all(dir);
}

TEST_CASE("wordnet-extract then run the wordnet experiment") {
  const auto dir = scratch("wordnet");
  const auto ext = (dir / "ext").string();
  auto r = invoke({"--synthetic", "60", "--out-dir", ext, "wordnet-extract"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("terms=60") != std::string::npos);
  const auto dataset = (dir / "ext" / "dataset.tsv").string();

  const auto edges = (dir / "ext" / "taxonomy.tsv").string();
  r = invoke({"--edge-list", edges, "--root", "S0", "--out-dir", (dir / "ext2").string(), "wordnet-extract"});
  CHECK(r.code == cli::kOk);
  CHECK(read_file(dir / "ext2" / "dataset.tsv") == read_file(dataset));

  r = invoke({"--experiment", "wordnet", "--dataset", dataset, "--folds", "2", "--fractions", "1,0.5", "--epochs",
              "2", "--out-dir", (dir / "run").string(), "run"});
  CHECK(r.code == cli::kOk);
  const auto agg = read_file(dir / "run" / "aggregate.csv");
  CHECK(agg.find("baseline,test") != std::string::npos);
  CHECK(agg.find("ntn_random_100,test") != std::string::npos);
  CHECK(agg.find("ntn_random_50,test") != std::string::npos);
  CHECK(invoke({"--experiment", "wordnet", "run"}).code == cli::kConfigError);
  fs::remove_all(dir);
}

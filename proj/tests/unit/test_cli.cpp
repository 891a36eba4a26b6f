#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using muonkit::cli::cli_main;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

// Small problem sizes so every invocation finishes quickly.
std::vector<std::string> small(std::vector<std::string> args) {
    for (const char* a : {"--n-train", "512", "--n-val", "64", "--in-dim", "8", "--classes", "4", "--hidden", "8"}) {
        args.emplace_back(a);
    }
    return args;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct InTempDir {
    fs::path prev = fs::current_path();
    explicit InTempDir(const std::string& name) {
        const auto dir = fs::temp_directory_path() / "muonkit_test_cli" / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        fs::current_path(dir);
    }
    ~InTempDir() { fs::current_path(prev); }
};

}    // namespace

TEST_CASE("run happy path") {
    InTempDir tmp("run");
    const auto r = run(small({"run", "--optimizer", "muonall", "--lr", "5e-5", "--task", "gaussian_clusters", "--seed",
                              "7", "--out", "run.csv"}));
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    REQUIRE(fs::exists("run.csv"));
    const std::string csv = slurp("run.csv");
    CHECK(csv.find("\"optimizer\":\"muonall\"") != std::string::npos);
    CHECK(csv.find("\"seed\":7") != std::string::npos);
    CHECK(csv.find("step,epoch,train_loss,val_loss,lr,wall_ms\n0,0,") != std::string::npos);
}

TEST_CASE("the full default run") {
    InTempDir tmp("default");
    const auto r = run({"run", "--optimizer", "muonall", "--lr", "5e-5", "--task", "gaussian_clusters", "--seed", "7",
                        "--out", "run.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.find("256 steps") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    InTempDir tmp("usage");
    auto r = run({"run", "--optimizer", "muon", "--lr", "5e-5", "--out", "x.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--lr-aux") != std::string::npos);
    CHECK(!fs::exists("x.csv"));

    r = run({"run", "--optimizer", "adamw", "--lr", "1e-3", "--out", "x.csv", "--bogus"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--bogus") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);

    r = run({"run", "--lr", "1e-3", "--out", "x.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--optimizer") != std::string::npos);

    r = run({"run", "--optimizer", "sgd", "--lr", "1e-3", "--out", "x.csv"});
    CHECK(r.code == 2);

    r = run({"run", "--optimizer", "adamw", "--out", "x.csv"});
    CHECK(r.code == 2);

    r = run({"run", "--optimizer", "adamw", "--lr", "-1", "--out", "x.csv"});
    CHECK(r.code == 2);

    r = run({});
    CHECK(r.code == 2);

    r = run({"compare", "--out", "d", "--optimizer", "adamw"});
    CHECK(r.code == 2);    // needs two runs
}

TEST_CASE("muon with both rates") {
    InTempDir tmp("muon");
    const auto r = run(small({"run", "--optimizer", "muon", "--lr", "2e-2", "--lr-aux", "3e-3", "--grad-accum", "2",
                              "--batch-size", "16", "--epochs", "1", "--out", "m.json"}));
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp("m.json"));
    CHECK(j["config"]["lr_aux0"] == 3e-3);
    CHECK(j["config"]["grad_accum"] == 2);
    CHECK(j["records"].size() == 16);    // 512 / 16 micro-batches, 2 per step
}

TEST_CASE("preset supplies rates") {
    InTempDir tmp("preset");
    const auto r = run(small({"run", "--optimizer", "muon", "--preset", "qwen2-0.5b", "--out", "q.csv"}));
    CHECK(r.code == 0);
    const std::string csv = slurp("q.csv");
    CHECK(csv.find("\"lr0\":5e-05") != std::string::npos);
    CHECK(csv.find("\"lr_aux0\":2e-05") != std::string::npos);
    CHECK(run(small({"run", "--optimizer", "muon", "--preset", "nope", "--out", "q.csv"})).code == 2);

    const auto p = run({"presets"});
    CHECK(p.code == 0);
    CHECK(p.out.find("smollm2-360m") != std::string::npos);
}

TEST_CASE("MUONKIT_SEED overrides --seed") {
    InTempDir tmp("seed");
    ::setenv("MUONKIT_SEED", "123", 1);
    CHECK(run(small({"run", "--optimizer", "adamw", "--lr", "1e-2", "--seed", "7", "--no-wall-time", "--out", "a.csv"}))
              .code == 0);
    ::unsetenv("MUONKIT_SEED");
    CHECK(run(small({"run", "--optimizer", "adamw", "--lr", "1e-2", "--seed", "123", "--no-wall-time", "--out",
                     "b.csv"}))
              .code == 0);
    CHECK(slurp("a.csv") == slurp("b.csv"));

    ::setenv("MUONKIT_SEED", "abc", 1);
    CHECK(run(small({"run", "--optimizer", "adamw", "--lr", "1e-2", "--out", "c.csv"})).code == 2);
    ::unsetenv("MUONKIT_SEED");
}

TEST_CASE("compare writes a summary") {
    InTempDir tmp("compare");
    const auto r = run(small({"compare", "--out", "cmp"}));
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp("cmp/summary.json"));
    REQUIRE(j["runs"].size() == 3);
    CHECK(fs::exists("cmp/adamw.csv"));
    CHECK(fs::exists("cmp/muon.csv"));
    CHECK(fs::exists("cmp/muonall.csv"));

    const auto explicit_lr =
        run(small({"compare", "--optimizer", "adamw", "--optimizer", "muonall", "--lr", "1e-3", "--lr", "3e-3", "--out",
                   "cmp2"}));
    CHECK(explicit_lr.code == 0);
    const auto j2 = nlohmann::json::parse(slurp("cmp2/summary.json"));
    CHECK(j2["runs"][1]["lr0"] == 3e-3);

    CHECK(run(small({"compare", "--optimizer", "adamw", "--optimizer", "muonall", "--lr", "1e-3", "--out", "cmp3"}))
              .code == 2);
}

TEST_CASE("diverging run exits 1 and keeps the partial log") {
    InTempDir tmp("diverge");
    const auto r = run(small({"run", "--optimizer", "adamw", "--lr", "1e300", "--out", "d.csv"}));
    CHECK(r.code == 1);
    CHECK(r.err.find("step 1") != std::string::npos);
    CHECK(fs::exists("d.csv"));
}

TEST_CASE("verify") {
    const auto r = run({"verify"});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS  ns-vs-svd") != std::string::npos);
    CHECK(r.out.find("PASS  muonall-1d-equivalence") != std::string::npos);
    CHECK(r.out.find("PASS  mlp-gradients") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

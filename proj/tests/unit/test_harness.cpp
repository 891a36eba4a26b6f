#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "muonkit/harness.hpp"
#include "test_util.hpp"

using namespace muonkit;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config(OptimizerKind kind) {
    TrainConfig cfg = desk_config(kind);
    cfg.task.n_train = 640;
    cfg.task.n_val = 128;
    cfg.task.in_dim = 8;
    cfg.task.n_classes = 4;
    cfg.hidden = 12;
    cfg.batch_size = 32;
    cfg.seed = 11;
    cfg.task.seed = 11;
    return cfg;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "muonkit_test_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// CSV rows with the wall_ms column cut off.
std::vector<std::string> rows_without_wall(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(line.substr(0, line.rfind(',')));
    }
    return out;
}

}    // namespace

TEST_CASE("config validation") {
    TrainConfig cfg = small_config(OptimizerKind::muon);
    CHECK_NOTHROW(cfg.validate());
    cfg.lr_aux0.reset();
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);

    cfg = small_config(OptimizerKind::adamw);
    cfg.grad_accum = 4;
    cfg.batch_size = 12;
    CHECK(cfg.effective_batch_size() == 48);
    cfg.grad_accum = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = small_config(OptimizerKind::adamw);
    cfg.lr0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = small_config(OptimizerKind::adamw);
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = small_config(OptimizerKind::adamw);
    cfg.epochs = 0;
    CHECK_THROWS_AS(run_experiment(cfg), InvalidArgument);
}

TEST_CASE("record counting") {
    TrainConfig cfg = desk_config(OptimizerKind::adamw);
    cfg.task.n_train = 6400;    // 100 batches of 64
    cfg.task.n_val = 128;
    const RunLog log = run_experiment(cfg);
    REQUIRE(log.records.size() == 200);
    CHECK(log.val_record_count() == 2);
    CHECK(log.records[99].val_loss.has_value());
    CHECK(log.records[199].val_loss.has_value());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        CHECK(log.records[i].step == static_cast<std::int64_t>(i));
        CHECK(log.records[i].epoch == (i < 100 ? 0 : 1));
        CHECK(log.records[i].wall_ms.has_value());
    }
    CHECK(log.mean_wall_ms().has_value());
}

TEST_CASE("schedule endpoints") {
    for (auto kind : {OptimizerKind::adamw, OptimizerKind::muon, OptimizerKind::muonall}) {
        const TrainConfig cfg = small_config(kind);
        const RunLog log = run_experiment(cfg);
        CHECK(log.records.front().lr == cfg.lr0);
        CHECK(std::abs(log.records.back().lr - 1e-7) <= 1e-12);
        for (std::size_t i = 1; i < log.records.size(); ++i) {
            CHECK(log.records[i].lr < log.records[i - 1].lr);
        }
    }
}

TEST_CASE("determinism") {
    const auto dir = scratch("determinism");
    for (auto kind : {OptimizerKind::adamw, OptimizerKind::muon, OptimizerKind::muonall}) {
        CAPTURE(to_string(kind));
        TrainConfig cfg = small_config(kind);
        cfg.record_wall_time = false;
        cfg.out_path = dir / "a.csv";
        run_experiment(cfg);
        cfg.out_path = dir / "b.csv";
        run_experiment(cfg);
        const std::string a = slurp(dir / "a.csv");
        CHECK(!a.empty());
        CHECK(a == slurp(dir / "b.csv"));

        // With timing on, only the wall_ms column may change.
        cfg.record_wall_time = true;
        cfg.out_path = dir / "c.csv";
        run_experiment(cfg);
        cfg.out_path = dir / "d.csv";
        run_experiment(cfg);
        CHECK(rows_without_wall(slurp(dir / "c.csv")) == rows_without_wall(slurp(dir / "d.csv")));
    }
}

TEST_CASE("csv layout") {
    TrainConfig cfg = small_config(OptimizerKind::muon);
    cfg.epochs = 1;
    const RunLog log = run_experiment(cfg);
    const std::string csv = to_csv(log);
    std::istringstream in(csv);
    std::string header, columns, first;
    std::getline(in, header);
    std::getline(in, columns);
    std::getline(in, first);
    CHECK(header.rfind("# muonkit 0.1.0 fingerprint=" + config_fingerprint(cfg) + " config={", 0) == 0);
    const auto echoed = nlohmann::json::parse(header.substr(header.find("config=") + 7));
    CHECK(echoed["optimizer"] == "muon");
    CHECK(echoed["lr_aux0"] == *cfg.lr_aux0);
    CHECK(echoed["task"]["n_train"] == 640);
    CHECK(columns == "step,epoch,train_loss,val_loss,lr,wall_ms");
    CHECK(first.rfind("0,0,", 0) == 0);
    CHECK(first.find(",,") != std::string::npos);    // no val loss on a mid-epoch step

    TrainConfig other = cfg;
    other.lr0 *= 2;
    CHECK(config_fingerprint(other) != config_fingerprint(cfg));
    other = cfg;
    other.out_path = "elsewhere.csv";
    CHECK(config_fingerprint(other) == config_fingerprint(cfg));
}

TEST_CASE("json output") {
    const auto dir = scratch("json");
    TrainConfig cfg = small_config(OptimizerKind::muonall);
    cfg.out_path = dir / "run.json";
    const RunLog log = run_experiment(cfg);
    const auto j = nlohmann::json::parse(slurp(cfg.out_path));
    CHECK(j["version"] == "0.1.0");
    CHECK(j["config"]["optimizer"] == "muonall");
    REQUIRE(j["records"].size() == log.records.size());
    CHECK(j["records"].back()["val_loss"].get<double>() == *log.records.back().val_loss);
    CHECK(j["records"][0]["val_loss"].is_null());
}

TEST_CASE("gradient accumulation") {
    SUBCASE("averaged micro-batch gradients match the full batch") {
        SplitMix64 rng(71);
        const MlpDims dims{6, 10, 3, false};
        MlpModel model = init_model(5, dims);
        for (auto& p : model.params()) {
            for (double& x : values(p.value)) x += 0.3 * rng.normal();
        }
        std::vector<Batch> micro;
        for (int k = 0; k < 4; ++k) {
            Batch b{testing::random_matrix(rng, 12, dims.in_dim), {}};
            for (int r = 0; r < 12; ++r) b.labels.push_back(static_cast<int>(rng.below(dims.n_classes)));
            micro.push_back(std::move(b));
        }
        const auto full = loss_and_grads(model, concat(micro));
        std::vector<Tensor> avg;
        double loss_avg = 0.0;
        for (const auto& b : micro) {
            auto lg = loss_and_grads(model, b);
            loss_avg += lg.loss / 4.0;
            if (avg.empty()) {
                avg = lg.grads;
                for (auto& t : avg) for (double& x : values(t)) x = 0.0;
            }
            for (std::size_t i = 0; i < avg.size(); ++i) {
                auto dst = values(avg[i]);
                auto src = values(lg.grads[i]);
                for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k] / 4.0;
            }
        }
        CHECK(std::abs(loss_avg - full.loss) <= 1e-12);
        for (std::size_t i = 0; i < avg.size(); ++i) {
            CHECK(testing::max_abs_diff(values(avg[i]), values(full.grads[i])) <= 1e-12);
        }
    }
    SUBCASE("one accumulated step matches one large step") {
        for (auto kind : {OptimizerKind::adamw, OptimizerKind::muon, OptimizerKind::muonall}) {
            TrainConfig big = small_config(kind);
            big.task.n_train = 64;
            big.epochs = 1;
            big.batch_size = 64;
            TrainConfig acc = big;
            acc.batch_size = 16;
            acc.grad_accum = 4;
            const RunLog a = run_experiment(big);
            const RunLog b = run_experiment(acc);
            REQUIRE(a.records.size() == 1);
            REQUIRE(b.records.size() == 1);
            CHECK(std::abs(a.records[0].train_loss - b.records[0].train_loss) <= 1e-12);
            CHECK(std::abs(*a.records[0].val_loss - *b.records[0].val_loss) <= 1e-12);
        }
    }
}

TEST_CASE("non-finite loss aborts with the step recorded") {
    const auto dir = scratch("abort");
    TrainConfig cfg = small_config(OptimizerKind::adamw);
    cfg.lr0 = 1e300;
    cfg.out_path = dir / "run.csv";
    try {
        run_experiment(cfg);
        FAIL("expected TrainingAborted");
    } catch (const TrainingAborted& e) {
        CHECK(e.step() == 1);
        REQUIRE(!e.partial().records.empty());
        CHECK(e.partial().records.back().step == 1);
        CHECK(std::isnan(e.partial().records.back().train_loss));
    }
    const std::string csv = slurp(cfg.out_path);
    CHECK(csv.find("\n1,0,nan,") != std::string::npos);
}

TEST_CASE("compare") {
    const auto dir = scratch("compare");
    std::vector<TrainConfig> cfgs;
    for (auto kind : {OptimizerKind::adamw, OptimizerKind::muon, OptimizerKind::muonall}) {
        cfgs.push_back(small_config(kind));
    }
    const CompareSummary s = compare(cfgs, dir);
    REQUIRE(s.entries.size() == 3);
    CHECK(!s.partial);
    for (const auto& e : s.entries) {
        CHECK(e.status == "ok");
        CHECK(fs::exists(e.csv_path));
        CHECK(e.final_val_loss.has_value());
        CHECK(e.mean_wall_ms.has_value());
    }
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    REQUIRE(j["runs"].size() == 3);
    CHECK(j["runs"][0]["optimizer"] == "adamw");
    CHECK(j["runs"][1]["optimizer"] == "muon");
    CHECK(j["runs"][2]["optimizer"] == "muonall");
    CHECK(j["runs"][2]["final_val_loss"].get<double>() == *s.entries[2].final_val_loss);
    CHECK(j["runs"][1]["mean_wall_ms_per_step"].is_number());
    CHECK(j["partial"] == false);

    CHECK_THROWS_AS(compare({cfgs[0]}, dir), InvalidArgument);
    auto mismatched = cfgs;
    mismatched[1].hidden = 13;
    CHECK_THROWS_AS(compare(mismatched, dir), InvalidArgument);

    const auto fail_dir = scratch("compare_fail");
    auto failing = cfgs;
    failing[1].lr0 = 1e300;
    failing[1].lr_aux0 = 1e300;
    try {
        compare(failing, fail_dir);
        FAIL("expected CompareFailed");
    } catch (const CompareFailed& e) {
        CHECK(e.summary().partial);
        CHECK(e.summary().entries[0].status == "ok");
        CHECK(e.summary().entries[1].status == "failed");
        CHECK(e.summary().entries[2].status == "skipped");
    }
    CHECK(nlohmann::json::parse(slurp(fail_dir / "summary.json"))["partial"] == true);
}

TEST_CASE("presets") {
    CHECK(lr_presets().size() == 4);
    const auto& q = find_preset("qwen2-0.5b");
    CHECK(q.adamw == 2e-5);
    CHECK(q.muonall == 5e-5);
    CHECK(q.muon_matrix == 5e-5);
    CHECK(q.muon_aux == 2e-5);
    const auto& s = find_preset("smollm2-360m");
    CHECK(s.adamw == 2e-4);
    CHECK(s.muonall == 8e-4);
    CHECK(s.muon_matrix == 7e-4);
    CHECK(s.muon_aux == 2e-4);
    const auto& g = find_preset("gpt2-medium");
    CHECK(g.adamw == 5e-4);
    CHECK(g.muonall == 9e-4);
    CHECK(g.muon_matrix == 9e-4);
    CHECK(g.muon_aux == 5e-4);
    CHECK_THROWS_AS(find_preset("nope"), InvalidArgument);

    const auto& desk = find_preset("desk");
    const double ratio = desk.muonall / desk.adamw;
    CHECK(ratio >= 2.5);
    CHECK(ratio <= 4.0);

    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::muon;
    apply_preset(cfg, q);
    CHECK(cfg.lr0 == 5e-5);
    CHECK(cfg.lr_aux0 == 2e-5);
    cfg.optimizer = OptimizerKind::adamw;
    apply_preset(cfg, q);
    CHECK(cfg.lr0 == 2e-5);
    CHECK(!cfg.lr_aux0);
}

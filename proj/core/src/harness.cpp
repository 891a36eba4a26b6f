#include "muonkit/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "muonkit/rng.hpp"

namespace muonkit {

using nlohmann::ordered_json;

namespace {

std::string format_double(double x) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", x);
    return buf.data();
}

std::string format_ms(double x) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.6f", x);
    return buf.data();
}

ordered_json task_json(const TaskSpec& t) {
    ordered_json j;
    j["kind"] = std::string(to_string(t.kind));
    j["n_train"] = t.n_train;
    j["n_val"] = t.n_val;
    if (t.kind == TaskKind::gaussian_clusters) {
        j["in_dim"] = t.in_dim;
        j["n_classes"] = t.n_classes;
        j["separation"] = t.separation;
    } else {
        j["data_file"] = t.data_file;
    }
    j["seed"] = t.seed;
    return j;
}

ordered_json config_json(const TrainConfig& cfg) {
    ordered_json j;
    j["optimizer"] = std::string(to_string(cfg.optimizer));
    j["lr0"] = cfg.lr0;
    j["lr_aux0"] = cfg.lr_aux0 ? ordered_json(*cfg.lr_aux0) : ordered_json(nullptr);
    j["momentum"] = cfg.momentum;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["weight_decay"] = cfg.weight_decay ? ordered_json(*cfg.weight_decay) : ordered_json(nullptr);
    j["ns_steps"] = cfg.ns_steps;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["grad_accum"] = cfg.grad_accum;
    j["hidden"] = cfg.hidden;
    j["task"] = task_json(cfg.task);
    j["seed"] = cfg.seed;
    j["record_wall_time"] = cfg.record_wall_time;
    return j;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << contents;
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

AdamHyper adam_hyper(const TrainConfig& cfg, double lr) {
    AdamHyper h;
    h.lr = lr;
    h.beta1 = cfg.beta1;
    h.beta2 = cfg.beta2;
    h.eps = cfg.adam_eps;
    h.weight_decay = cfg.weight_decay.value_or(0.01);
    return h;
}

void add_scaled(std::vector<Tensor>& acc, const std::vector<Tensor>& grads) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
        auto dst = values(acc[i]);
        auto src = values(grads[i]);
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] += src[k];
        }
    }
}

}    // namespace

void TrainConfig::validate() const {
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) {
        throw InvalidArgument("lr0 must be finite and > 0");
    }
    if (optimizer == OptimizerKind::muon) {
        if (!lr_aux0) {
            throw InvalidArgument("muon needs a second learning rate for non-matrix parameters (lr_aux0)");
        }
        if (!(*lr_aux0 > 0.0) || !std::isfinite(*lr_aux0)) {
            throw InvalidArgument("lr_aux0 must be finite and > 0");
        }
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be > 0");
    if (weight_decay && !(*weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
    if (ns_steps < 1) throw InvalidArgument("ns_steps must be >= 1");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (grad_accum < 1) throw InvalidArgument("grad_accum must be >= 1");
    if (hidden < 1) throw InvalidArgument("hidden must be >= 1");
    task.validate();
}

std::size_t RunLog::val_record_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.val_loss.has_value(); }));
}

std::optional<double> RunLog::mean_wall_ms() const {
    if (records.empty() || !records.front().wall_ms) {
        return std::nullopt;
    }
    double sum = 0.0;
    for (const auto& r : records) {
        sum += r.wall_ms.value_or(0.0);
    }
    return sum / static_cast<double>(records.size());
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg) {
    if (cfg.optimizer == OptimizerKind::adamw) {
        return std::make_unique<AdamW>(adam_hyper(cfg, cfg.lr0));
    }
    MuonHyper h;
    h.lr_matrix = cfg.lr0;
    h.lr_aux = cfg.lr_aux0.value_or(cfg.lr0);
    h.momentum = cfg.momentum;
    h.weight_decay = cfg.weight_decay.value_or(0.0);
    h.ns.steps = cfg.ns_steps;
    h.adam_aux = adam_hyper(cfg, h.lr_aux);
    if (cfg.optimizer == OptimizerKind::muon) {
        return std::make_unique<Muon>(std::move(h));
    }
    return std::make_unique<MuonAll>(std::move(h));
}

std::string config_to_json(const TrainConfig& cfg) { return config_json(cfg).dump(); }

std::string config_fingerprint(const TrainConfig& cfg) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_to_json(cfg))));
    return buf.data();
}

RunLog run_experiment(const TrainConfig& cfg) {
    cfg.validate();
    const TaskData data = make_task(cfg.task, cfg.batch_size);
    const std::size_t steps_per_epoch = data.train.size() / cfg.grad_accum;
    if (steps_per_epoch == 0) {
        throw InvalidArgument("not enough training batches for one optimizer step (" +
                              std::to_string(data.train.size()) + " batches, grad_accum " +
                              std::to_string(cfg.grad_accum) + ")");
    }
    const auto total_steps = static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs;
    // Step indices run 0..total_steps-1; the last one lands on kFinalLr.
    const std::int64_t schedule_span = std::max<std::int64_t>(total_steps - 1, 1);

    MlpModel model = init_model(cfg.seed, {data.in_dim, cfg.hidden, data.n_classes, false});
    auto optimizer = make_optimizer(cfg);
    const double lr_aux0 = cfg.lr_aux0.value_or(cfg.lr0);

    RunLog log;
    log.config = cfg;
    log.records.reserve(static_cast<std::size_t>(total_steps));

    auto abort = [&](const std::string& why, std::int64_t step) {
        if (!cfg.out_path.empty()) {
            write_log(log, cfg.out_path);
        }
        throw TrainingAborted("step " + std::to_string(step) + ": " + why, step, log);
    };

    SplitMix64 order_rng(cfg.seed ^ 0x6a09e667f3bcc909ULL);
    std::vector<std::size_t> order(data.train.size());
    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[order_rng.below(i)]);
        }

        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
            RunRecord rec;
            rec.step = step;
            rec.epoch = epoch;
            rec.lr = lr_schedule(step, schedule_span, cfg.lr0);

            std::vector<Tensor> grads;
            double loss_sum = 0.0;
            try {
                for (std::size_t k = 0; k < cfg.grad_accum; ++k) {
                    const Batch& b = data.train[order[s * cfg.grad_accum + k]];
                    LossAndGrads lg = loss_and_grads(model, b);
                    loss_sum += lg.loss;
                    if (k == 0) {
                        grads = std::move(lg.grads);
                    } else {
                        add_scaled(grads, lg.grads);
                    }
                }
            } catch (const NonFiniteError& e) {
                rec.train_loss = std::nan("");
                log.records.push_back(rec);
                abort(e.what(), step);
            }
            if (cfg.grad_accum > 1) {
                const double inv = 1.0 / static_cast<double>(cfg.grad_accum);
                for (auto& g : grads) {
                    for (double& x : values(g)) x *= inv;
                }
            }
            rec.train_loss = loss_sum / static_cast<double>(cfg.grad_accum);

            const GroupLr lr{rec.lr, lr_schedule(step, schedule_span, lr_aux0)};
            const auto t0 = std::chrono::steady_clock::now();
            try {
                optimizer->step(model.params(), grads, lr);
            } catch (const NonFiniteError& e) {
                log.records.push_back(rec);
                abort(e.what(), step);
            }
            const auto t1 = std::chrono::steady_clock::now();
            if (cfg.record_wall_time) {
                rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            }
            log.records.push_back(rec);
        }

        try {
            log.records.back().val_loss = mean_loss(model, data.val);
        } catch (const NonFiniteError& e) {
            abort(e.what(), step - 1);
        }
    }

    if (!cfg.out_path.empty()) {
        write_log(log, cfg.out_path);
    }
    return log;
}

std::string to_csv(const RunLog& log) {
    std::ostringstream out;
    out << "# muonkit " << kVersion << " fingerprint=" << config_fingerprint(log.config)
        << " config=" << config_to_json(log.config) << '\n';
    out << "step,epoch,train_loss,val_loss,lr,wall_ms\n";
    for (const auto& r : log.records) {
        out << r.step << ',' << r.epoch << ',' << format_double(r.train_loss) << ','
            << (r.val_loss ? format_double(*r.val_loss) : "") << ',' << format_double(r.lr) << ','
            << (r.wall_ms ? format_ms(*r.wall_ms) : "") << '\n';
    }
    return out.str();
}

std::string to_json(const RunLog& log) {
    ordered_json j;
    j["version"] = std::string(kVersion);
    j["fingerprint"] = config_fingerprint(log.config);
    j["config"] = config_json(log.config);
    auto& recs = j["records"] = ordered_json::array();
    for (const auto& r : log.records) {
        ordered_json e;
        e["step"] = r.step;
        e["epoch"] = r.epoch;
        e["train_loss"] = std::isfinite(r.train_loss) ? ordered_json(r.train_loss) : ordered_json(nullptr);
        e["val_loss"] = r.val_loss ? ordered_json(*r.val_loss) : ordered_json(nullptr);
        e["lr"] = r.lr;
        e["wall_ms"] = r.wall_ms ? ordered_json(*r.wall_ms) : ordered_json(nullptr);
        recs.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

void write_log(const RunLog& log, const std::filesystem::path& path) {
    write_file(path, path.extension() == ".json" ? to_json(log) : to_csv(log));
}

std::string CompareSummary::to_json() const {
    ordered_json j;
    j["version"] = std::string(kVersion);
    j["partial"] = partial;
    auto& arr = j["runs"] = ordered_json::array();
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    for (const auto& e : entries) {
        ordered_json r;
        r["optimizer"] = std::string(muonkit::to_string(e.optimizer));
        r["lr0"] = e.lr0;
        r["lr_aux0"] = opt(e.lr_aux0);
        r["status"] = e.status;
        if (!e.error.empty()) {
            r["error"] = e.error;
        }
        r["final_train_loss"] = opt(e.final_train_loss);
        r["final_val_loss"] = opt(e.final_val_loss);
        r["mean_wall_ms_per_step"] = opt(e.mean_wall_ms);
        r["csv"] = e.csv_path.filename().string();
        arr.push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

namespace {

// Everything except optimizer choice and its hyperparameters.
ordered_json shared_fields(const TrainConfig& cfg) {
    ordered_json j;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["grad_accum"] = cfg.grad_accum;
    j["hidden"] = cfg.hidden;
    j["task"] = task_json(cfg.task);
    j["seed"] = cfg.seed;
    return j;
}

}    // namespace

CompareSummary compare(const std::vector<TrainConfig>& cfgs, const std::filesystem::path& out_dir) {
    if (cfgs.size() < 2) {
        throw InvalidArgument("compare needs at least two configs");
    }
    const auto reference = shared_fields(cfgs.front());
    for (const auto& cfg : cfgs) {
        if (shared_fields(cfg) != reference) {
            throw InvalidArgument("compared configs may differ only in optimizer settings and learning rates");
        }
        cfg.validate();
    }

    CompareSummary summary;
    std::vector<std::string> used;
    for (const auto& cfg : cfgs) {
        CompareEntry e;
        e.optimizer = cfg.optimizer;
        e.lr0 = cfg.lr0;
        if (cfg.optimizer == OptimizerKind::muon) {
            e.lr_aux0 = cfg.lr_aux0;
        }
        std::string name(to_string(cfg.optimizer));
        const auto dupes = std::count(used.begin(), used.end(), name);
        used.push_back(name);
        if (dupes > 0) {
            name += "_" + std::to_string(dupes + 1);
        }
        e.csv_path = out_dir / (name + ".csv");
        e.status = "skipped";
        summary.entries.push_back(std::move(e));
    }

    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        auto& e = summary.entries[i];
        TrainConfig cfg = cfgs[i];
        cfg.out_path = e.csv_path;
        try {
            const RunLog log = run_experiment(cfg);
            e.status = "ok";
            e.final_train_loss = log.records.back().train_loss;
            e.final_val_loss = log.records.back().val_loss;
            e.mean_wall_ms = log.mean_wall_ms();
        } catch (const Error& err) {
            e.status = "failed";
            e.error = err.what();
            summary.partial = true;
            write_file(out_dir / "summary.json", summary.to_json());
            throw CompareFailed(std::string(to_string(cfg.optimizer)) + " run failed: " + err.what(), summary);
        }
    }
    write_file(out_dir / "summary.json", summary.to_json());
    return summary;
}

namespace {

constexpr std::array<LrPreset, 4> kPresets{{
    {"desk", 1e-2, 3e-2, 2e-2, 3e-3, "tuned for the default gaussian_clusters desk config"},
    {"qwen2-0.5b", 2e-5, 5e-5, 5e-5, 2e-5, "Qwen2-0.5B finetuning, effective batch 48 (12 x 4)"},
    {"smollm2-360m", 2e-4, 8e-4, 7e-4, 2e-4, "SmolLM2-360M finetuning, effective batch 80 (20 x 4)"},
    {"gpt2-medium", 5e-4, 9e-4, 9e-4, 5e-4, "GPT2-medium finetuning, effective batch 60 (15 x 4)"},
}};

}    // namespace

std::span<const LrPreset> lr_presets() noexcept { return kPresets; }

const LrPreset& find_preset(std::string_view name) {
    for (const auto& p : kPresets) {
        if (p.name == name) {
            return p;
        }
    }
    throw InvalidArgument("unknown preset '" + std::string(name) + "'");
}

void apply_preset(TrainConfig& cfg, const LrPreset& preset) {
    switch (cfg.optimizer) {
        case OptimizerKind::adamw:
            cfg.lr0 = preset.adamw;
            cfg.lr_aux0.reset();
            break;
        case OptimizerKind::muon:
            cfg.lr0 = preset.muon_matrix;
            cfg.lr_aux0 = preset.muon_aux;
            break;
        case OptimizerKind::muonall:
            cfg.lr0 = preset.muonall;
            cfg.lr_aux0.reset();
            break;
    }
}

TrainConfig desk_config(OptimizerKind kind) {
    TrainConfig cfg;
    cfg.optimizer = kind;
    cfg.task = TaskSpec{};
    cfg.task.seed = cfg.seed;
    cfg.batch_size = 64;
    cfg.grad_accum = 1;
    cfg.hidden = 64;
    cfg.epochs = 2;
    apply_preset(cfg, find_preset("desk"));
    return cfg;
}

}    // namespace muonkit

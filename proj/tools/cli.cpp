#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "muonkit/harness.hpp"
#include "muonkit/verify.hpp"

namespace muonkit::cli {

namespace {

// Flags shared by `run` and `compare`.
struct CommonFlags {
    std::optional<double> momentum;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::optional<double> weight_decay;
    std::optional<int> ns_steps;
    int epochs = 2;
    std::size_t batch_size = 64;
    std::size_t grad_accum = 1;
    std::size_t hidden = 64;
    std::string task = "gaussian_clusters";
    std::string data_file;
    std::size_t n_train = 8192;
    std::size_t n_val = 1024;
    std::size_t in_dim = 32;
    std::size_t n_classes = 8;
    double separation = TaskSpec{}.separation;
    std::uint64_t seed = 0;
    bool no_wall_time = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--momentum", f.momentum, "Momentum for muon/muonall (default 0.95)");
    app->add_option("--beta1", f.beta1, "AdamW beta1 (default 0.9)");
    app->add_option("--beta2", f.beta2, "AdamW beta2 (default 0.999)");
    app->add_option("--weight-decay", f.weight_decay,
                    "Decoupled weight decay (default 0.01 for AdamW, 0 for orthogonalized updates)");
    app->add_option("--ns-steps", f.ns_steps, "Newton-Schulz iterations (default 5)");
    app->add_option("--epochs", f.epochs, "Passes over the training set")->capture_default_str();
    app->add_option("--batch-size", f.batch_size, "Micro-batch size")->capture_default_str();
    app->add_option("--grad-accum", f.grad_accum, "Micro-batches averaged per optimizer step")
        ->capture_default_str();
    app->add_option("--hidden", f.hidden, "Hidden width of the MLP")->capture_default_str();
    app->add_option("--task", f.task, "gaussian_clusters or char_bigram")
        ->check(CLI::IsMember({"gaussian_clusters", "char_bigram"}))
        ->capture_default_str();
    app->add_option("--data-file", f.data_file, "UTF-8 text for char_bigram");
    app->add_option("--n-train", f.n_train, "Training samples")->capture_default_str();
    app->add_option("--n-val", f.n_val, "Validation samples")->capture_default_str();
    app->add_option("--in-dim", f.in_dim, "Input width (gaussian_clusters)")->capture_default_str();
    app->add_option("--classes", f.n_classes, "Number of classes (gaussian_clusters)")->capture_default_str();
    app->add_option("--separation", f.separation, "Std-dev of class means (gaussian_clusters)")
        ->capture_default_str();
    app->add_option("--seed", f.seed, "Seed for data, init and batch order; MUONKIT_SEED overrides")
        ->capture_default_str();
    app->add_flag("--no-wall-time", f.no_wall_time, "Leave wall_ms empty so the CSV depends only on the config");
}

TrainConfig base_config(const CommonFlags& f) {
    TrainConfig cfg;
    if (f.momentum) cfg.momentum = *f.momentum;
    if (f.beta1) cfg.beta1 = *f.beta1;
    if (f.beta2) cfg.beta2 = *f.beta2;
    cfg.weight_decay = f.weight_decay;
    if (f.ns_steps) cfg.ns_steps = *f.ns_steps;
    cfg.epochs = f.epochs;
    cfg.batch_size = f.batch_size;
    cfg.grad_accum = f.grad_accum;
    cfg.hidden = f.hidden;
    cfg.task.kind = parse_task_kind(f.task);
    cfg.task.data_file = f.data_file;
    cfg.task.n_train = f.n_train;
    cfg.task.n_val = f.n_val;
    cfg.task.in_dim = f.in_dim;
    cfg.task.n_classes = f.n_classes;
    cfg.task.separation = f.separation;
    std::uint64_t seed = f.seed;
    if (const char* env = std::getenv("MUONKIT_SEED"); env != nullptr && *env != '\0') {
        try {
            seed = std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("MUONKIT_SEED is not an unsigned integer: ") + env);
        }
    }
    cfg.seed = seed;
    cfg.task.seed = seed;
    cfg.record_wall_time = !f.no_wall_time;
    return cfg;
}

void print_log_summary(std::ostream& out, const RunLog& log) {
    const auto& last = log.records.back();
    out << to_string(log.config.optimizer) << ": " << log.records.size() << " steps, final train_loss "
        << last.train_loss;
    if (last.val_loss) {
        out << ", val_loss " << *last.val_loss;
    }
    if (auto ms = log.mean_wall_ms()) {
        out << ", mean step " << *ms << " ms";
    }
    out << '\n';
}

}    // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"muonkit: AdamW / Muon / MuonAll optimizer comparison toolkit", "muonkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // run
    CommonFlags run_flags;
    std::string run_optimizer;
    std::optional<double> run_lr;
    std::optional<double> run_lr_aux;
    std::string run_preset;
    std::string run_out;
    auto* run = app.add_subcommand("run", "Train one model and write its per-step log");
    run->add_option("--optimizer", run_optimizer, "adamw, muon or muonall")
        ->required()
        ->check(CLI::IsMember({"adamw", "muon", "muonall"}));
    run->add_option("--lr", run_lr, "Initial learning rate (matrix group for muon)");
    run->add_option("--lr-aux", run_lr_aux, "muon: initial AdamW rate for non-matrix parameters");
    run->add_option("--preset", run_preset, "Take learning rates from a named preset (see `presets`)");
    run->add_option("--out", run_out, "Output path (.csv, or .json for the JSON log)")->required();
    add_common(run, run_flags);

    // compare
    CommonFlags cmp_flags;
    std::vector<std::string> cmp_optimizers{"adamw", "muon", "muonall"};
    std::vector<double> cmp_lrs;
    std::optional<double> cmp_lr_aux;
    std::string cmp_preset = "desk";
    std::string cmp_out;
    auto* cmp = app.add_subcommand("compare", "Run several optimizers on one task and summarize");
    cmp->add_option("--optimizer", cmp_optimizers, "Optimizers to run, in order (repeatable)")
        ->check(CLI::IsMember({"adamw", "muon", "muonall"}))
        ->capture_default_str();
    cmp->add_option("--lr", cmp_lrs, "Initial rate per --optimizer entry (default: from --preset)");
    cmp->add_option("--lr-aux", cmp_lr_aux, "muon: initial rate for non-matrix parameters");
    cmp->add_option("--preset", cmp_preset, "Learning-rate preset used when --lr is absent")->capture_default_str();
    cmp->add_option("--out", cmp_out, "Output directory for per-run CSVs and summary.json")->required();
    add_common(cmp, cmp_flags);

    auto* verify = app.add_subcommand("verify", "Run the oracle suites (NS vs SVD, 1D equivalence, gradients)");
    auto* presets = app.add_subcommand("presets", "List the learning-rate presets");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << failing->help();
        return kExitUsage;
    }

    try {
        if (run->parsed()) {
            TrainConfig cfg = base_config(run_flags);
            cfg.optimizer = parse_optimizer_kind(run_optimizer);
            if (!run_preset.empty()) {
                apply_preset(cfg, find_preset(run_preset));
            } else if (!run_lr) {
                throw InvalidArgument("--lr is required (or pass --preset)");
            }
            if (run_lr) cfg.lr0 = *run_lr;
            if (run_lr_aux) cfg.lr_aux0 = run_lr_aux;
            if (cfg.optimizer == OptimizerKind::muon && !cfg.lr_aux0) {
                throw InvalidArgument("muon needs --lr-aux, the AdamW rate for non-matrix parameters");
            }
            cfg.out_path = run_out;
            cfg.validate();
            try {
                const RunLog log = run_experiment(cfg);
                print_log_summary(out, log);
                out << "wrote " << run_out << '\n';
            } catch (const TrainingAborted& e) {
                err << "error: training aborted at " << e.what() << " (partial log in " << run_out << ")\n";
                return kExitFailure;
            }
            return kExitOk;
        }

        if (cmp->parsed()) {
            if (!cmp_lrs.empty() && cmp_lrs.size() != cmp_optimizers.size()) {
                throw InvalidArgument("--lr must be given once per --optimizer entry");
            }
            const LrPreset& preset = find_preset(cmp_preset);
            std::vector<TrainConfig> cfgs;
            for (std::size_t i = 0; i < cmp_optimizers.size(); ++i) {
                TrainConfig cfg = base_config(cmp_flags);
                cfg.optimizer = parse_optimizer_kind(cmp_optimizers[i]);
                apply_preset(cfg, preset);
                if (!cmp_lrs.empty()) cfg.lr0 = cmp_lrs[i];
                if (cmp_lr_aux && cfg.optimizer == OptimizerKind::muon) cfg.lr_aux0 = cmp_lr_aux;
                cfgs.push_back(std::move(cfg));
            }
            try {
                const CompareSummary summary = compare(cfgs, cmp_out);
                for (const auto& e : summary.entries) {
                    out << to_string(e.optimizer) << ": final train_loss " << e.final_train_loss.value_or(NAN)
                        << ", val_loss " << e.final_val_loss.value_or(NAN);
                    if (e.mean_wall_ms) {
                        out << ", mean step " << *e.mean_wall_ms << " ms";
                    }
                    out << '\n';
                }
                out << "wrote " << (std::filesystem::path(cmp_out) / "summary.json").string() << '\n';
            } catch (const CompareFailed& e) {
                err << "error: " << e.what() << " (partial summary in " << cmp_out << ")\n";
                return kExitFailure;
            }
            return kExitOk;
        }

        if (verify->parsed()) {
            bool ok = true;
            for (const auto& r : oracles::run_verify_suites()) {
                out << oracles::format_result(r) << '\n';
                ok = ok && r.passed;
            }
            return ok ? kExitOk : kExitFailure;
        }

        if (presets->parsed()) {
            for (const auto& p : lr_presets()) {
                out << p.name << ": adamw " << p.adamw << ", muonall " << p.muonall << ", muon " << p.muon_matrix
                    << " (aux " << p.muon_aux << ")  # " << p.note << '\n';
            }
            return kExitOk;
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}    // namespace muonkit::cli

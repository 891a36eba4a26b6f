#pragma once

// Seeded optimizer-comparison runs.
//
// A run builds the task and model from seeds, takes `epochs` passes of
// optimizer steps (each averaging `grad_accum` micro-batch gradients), decays
// every learning rate linearly to kFinalLr over the run, and records one
// row per optimizer step. Validation loss is attached to the last step of
// each epoch.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muonkit/error.hpp"
#include "muonkit/optimizers.hpp"
#include "muonkit/tasks.hpp"

namespace muonkit {

inline constexpr std::string_view kVersion = "0.1.0";

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adamw;
    double lr0 = 1e-3;
    /// Muon only: initial rate of the AdamW group.
    std::optional<double> lr_aux0;
    double momentum = 0.95;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Unset: 0.01 for AdamW (and Muon's AdamW group), 0 for orthogonalized updates.
    std::optional<double> weight_decay;
    int ns_steps = 5;
    int epochs = 2;
    std::size_t batch_size = 64;
    std::size_t grad_accum = 1;
    std::size_t hidden = 64;
    TaskSpec task;
    std::uint64_t seed = 0;
    /// false leaves the wall_ms column empty so output depends on the config alone.
    bool record_wall_time = true;
    std::filesystem::path out_path;

    /// Throws InvalidArgument describing the first violated constraint.
    void validate() const;

    std::size_t effective_batch_size() const noexcept { return batch_size * grad_accum; }
};

struct RunRecord {
    std::int64_t step = 0;
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
    double lr = 0.0;
    std::optional<double> wall_ms;
};

struct RunLog {
    TrainConfig config;
    std::vector<RunRecord> records;

    std::size_t val_record_count() const noexcept;
    /// Mean optimizer-step time; nullopt when timing was not recorded.
    std::optional<double> mean_wall_ms() const;
};

/// Raised when a loss or gradient goes non-finite. Carries the partial log;
/// the offending step is the last record.
class TrainingAborted : public Error {
public:
    TrainingAborted(const std::string& what, std::int64_t step, RunLog partial)
        : Error(what), step_(step), partial_(std::move(partial)) {}

    std::int64_t step() const noexcept { return step_; }
    const RunLog& partial() const noexcept { return partial_; }

private:
    std::int64_t step_;
    RunLog partial_;
};

/// Runs one experiment. When cfg.out_path is non-empty the log is also
/// written there (JSON for a ".json" extension, CSV otherwise), including
/// the partial log of an aborted run.
RunLog run_experiment(const TrainConfig& cfg);

/// Optimizer and hyperparameters built from a config, as used by run_experiment.
std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg);

/// Hex FNV-1a 64 of the canonical config JSON (out_path excluded).
std::string config_fingerprint(const TrainConfig& cfg);

std::string config_to_json(const TrainConfig& cfg);

/// `# muonkit ...` comment line, then `step,epoch,train_loss,val_loss,lr,wall_ms`.
std::string to_csv(const RunLog& log);
std::string to_json(const RunLog& log);
void write_log(const RunLog& log, const std::filesystem::path& path);

struct CompareEntry {
    OptimizerKind optimizer = OptimizerKind::adamw;
    double lr0 = 0.0;
    std::optional<double> lr_aux0;
    std::string status;    // "ok", "failed" or "skipped"
    std::string error;
    std::optional<double> final_train_loss;
    std::optional<double> final_val_loss;
    std::optional<double> mean_wall_ms;
    std::filesystem::path csv_path;
};

struct CompareSummary {
    std::vector<CompareEntry> entries;
    bool partial = false;

    std::string to_json() const;
};

/// Runs each config in order, writing `<name>.csv` per run and
/// `summary.json` into `out_dir`. Needs at least two configs that differ only
/// in optimizer fields and learning rates. The first failing run stops the
/// comparison; the summary is still written with `partial: true` and the
/// function throws CompareFailed.
CompareSummary compare(const std::vector<TrainConfig>& cfgs, const std::filesystem::path& out_dir);

class CompareFailed : public Error {
public:
    CompareFailed(const std::string& what, CompareSummary summary) : Error(what), summary_(std::move(summary)) {}
    const CompareSummary& summary() const noexcept { return summary_; }

private:
    CompareSummary summary_;
};

/// Named initial learning rates for the three optimizers.
struct LrPreset {
    std::string_view name;
    double adamw;
    double muonall;
    double muon_matrix;
    double muon_aux;
    std::string_view note;
};

/// "desk" (tuned for the default gaussian_clusters config) followed by the
/// finetuning rates reported for Qwen2-0.5B, SmolLM2-360M and GPT2-medium.
std::span<const LrPreset> lr_presets() noexcept;
/// Throws InvalidArgument for an unknown name.
const LrPreset& find_preset(std::string_view name);

/// Sets lr0 / lr_aux0 of `cfg` from `preset` for cfg.optimizer.
void apply_preset(TrainConfig& cfg, const LrPreset& preset);

/// The default desk experiment for `kind`, with "desk" preset rates.
TrainConfig desk_config(OptimizerKind kind);

}    // namespace muonkit

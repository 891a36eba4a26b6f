#pragma once

// AdamW, Muon and MuonAll.
//
// Muon orthogonalizes the Nesterov-combined momentum of every matrix
// parameter and hands 1D parameters to an AdamW sidecar. MuonAll treats a 1D
// parameter as a diagonal matrix inside the same iteration, so one optimizer
// covers every parameter.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "muonkit/newton_schulz.hpp"
#include "muonkit/param.hpp"

namespace muonkit {

enum class OptimizerKind { adamw, muon, muonall };

std::string_view to_string(OptimizerKind kind) noexcept;
/// Throws InvalidArgument for anything but "adamw", "muon", "muonall".
OptimizerKind parse_optimizer_kind(std::string_view name);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    void validate() const;
};

/// Multiplier applied to a parameter's orthogonalized update. Empty means 1.
using UpdateScaleFn = std::function<double(const ParamTensor&)>;

struct MuonHyper {
    double lr_matrix = 0.02;
    /// Initial rate of the AdamW group (Muon only). Overrides adam_aux.lr.
    double lr_aux = 1e-3;
    double momentum = 0.95;
    double weight_decay = 0.0;
    NsConfig ns;
    AdamHyper adam_aux;
    /// Send Role::embedding matrices to the AdamW group instead of the NS group.
    bool embeddings_to_aux = false;
    UpdateScaleFn update_scale;

    void validate() const;
};

struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
};

struct MomentumState {
    Tensor buffer;
};

/// Indices into the parameter list. `primary` is the orthogonalized group for
/// Muon and the single group for AdamW / MuonAll.
struct ParamGroups {
    std::vector<std::size_t> primary;
    std::vector<std::size_t> aux;
};

/// Throws InvalidArgument on duplicate names.
ParamGroups partition_params(std::span<const ParamTensor> params, OptimizerKind kind,
                             bool embeddings_to_aux = false);

/// One decoupled-weight-decay Adam step. `state` buffers are allocated on
/// first use. Throws NonFiniteError (leaving everything untouched) on a
/// non-finite gradient.
void adamw_step(ParamTensor& param, const Tensor& grad, AdamState& state, const AdamHyper& hyper,
                double lr_now);

/// buffer ← μ·buffer + grad; update ← NS(grad + μ·buffer);
/// param ← param·(1 − lr·wd) − lr·scale·update.
void muon_matrix_step(Matrix& param, const Matrix& grad, Matrix& buffer, const MuonHyper& hyper,
                      double lr_now, double update_scale = 1.0);

/// Matrix parameters go through muon_matrix_step; vector parameters use the
/// diagonal form of the same iteration.
void muonall_step(ParamTensor& param, const Tensor& grad, MomentumState& state, const MuonHyper& hyper,
                  double lr_now);

/// Current rate per group. `aux` is only read by Muon.
struct GroupLr {
    double primary = 0.0;
    double aux = 0.0;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;

    virtual OptimizerKind kind() const noexcept = 0;

    /// Advances every parameter by one step. All gradients are validated
    /// (shape and finiteness) before any parameter or buffer is touched.
    void step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr);

    /// Per-parameter state as visible buffers, for inspection in tests.
    virtual std::vector<const Tensor*> state_buffers() const = 0;

protected:
    virtual void do_step(std::span<ParamTensor> params, std::span<const Tensor> grads,
                         const GroupLr& lr) = 0;
};

class AdamW final : public Optimizer {
public:
    explicit AdamW(AdamHyper hyper);

    OptimizerKind kind() const noexcept override { return OptimizerKind::adamw; }
    std::vector<const Tensor*> state_buffers() const override;
    const std::vector<AdamState>& states() const noexcept { return states_; }

private:
    void do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) override;

    AdamHyper hyper_;
    std::vector<AdamState> states_;
};

class Muon final : public Optimizer {
public:
    explicit Muon(MuonHyper hyper);

    OptimizerKind kind() const noexcept override { return OptimizerKind::muon; }
    std::vector<const Tensor*> state_buffers() const override;

private:
    void do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) override;

    MuonHyper hyper_;
    AdamHyper aux_hyper_;
    ParamGroups groups_;
    bool initialized_ = false;
    std::vector<MomentumState> momentum_;
    std::vector<AdamState> adam_;
};

class MuonAll final : public Optimizer {
public:
    explicit MuonAll(MuonHyper hyper);

    OptimizerKind kind() const noexcept override { return OptimizerKind::muonall; }
    std::vector<const Tensor*> state_buffers() const override;

private:
    void do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) override;

    MuonHyper hyper_;
    std::vector<MomentumState> states_;
};

/// Final rate of every linear decay.
inline constexpr double kFinalLr = 1e-7;

/// Linear decay from lr0 at step 0 to kFinalLr at step == total_steps.
/// Both endpoints are returned exactly.
double lr_schedule(std::int64_t step, std::int64_t total_steps, double lr0);

}    // namespace muonkit

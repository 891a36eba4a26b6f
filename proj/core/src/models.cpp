#include "muonkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muonkit/error.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {

namespace {

void require_vector(const ParamTensor& p, std::size_t len) {
    const auto* v = std::get_if<Vector>(&p.value);
    if (v == nullptr || v->size() != len) {
        throw ShapeError("MlpModel: '" + p.name + "' must be a vector of length " + std::to_string(len));
    }
}

void require_matrix(const ParamTensor& p, std::size_t rows, std::size_t cols) {
    const auto* m = std::get_if<Matrix>(&p.value);
    if (m == nullptr || m->rows() != rows || m->cols() != cols) {
        throw ShapeError("MlpModel: '" + p.name + "' must be a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " matrix");
    }
}

Matrix random_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(rows));
    std::vector<double> data(rows * cols);
    for (double& x : data) {
        x = rng.normal() * stddev;
    }
    return Matrix(rows, cols, std::move(data));
}

Vector filled(std::size_t len, double value) {
    return Vector(std::vector<double>(len, value));
}

void check_batch(const MlpModel& model, const Batch& batch) {
    const auto& d = model.dims();
    if (batch.inputs.cols() != d.in_dim) {
        throw ShapeError("batch has " + std::to_string(batch.inputs.cols()) + " input columns, model expects " +
                         std::to_string(d.in_dim));
    }
    if (batch.inputs.rows() != batch.labels.size() || batch.labels.empty()) {
        throw ShapeError("batch inputs and labels disagree in row count (or batch is empty)");
    }
    for (int y : batch.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= d.n_classes) {
            throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(d.n_classes) + ")");
        }
    }
}

void add_row_bias(Matrix& m, const Vector& b) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += b[c];
        }
    }
}

Vector column_sums(const Matrix& m) {
    Vector out(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            out[c] += row[c];
        }
    }
    return out;
}

Matrix logits_of(const MlpModel& model, const Matrix& act) {
    Matrix logits = matmul(act, model.w2());
    if (!model.dims().matrix_only) {
        add_row_bias(logits, model.b2());
    }
    return logits;
}

}    // namespace

MlpModel::MlpModel(MlpDims dims, std::vector<ParamTensor> params) : dims_(dims), params_(std::move(params)) {
    if (dims_.in_dim == 0 || dims_.hidden == 0 || dims_.n_classes == 0) {
        throw InvalidArgument("MlpModel: dimensions must be positive");
    }
    const std::size_t expected = dims_.matrix_only ? 2 : 6;
    if (params_.size() != expected) {
        throw ShapeError("MlpModel: expected " + std::to_string(expected) + " parameters");
    }
    require_matrix(params_[0], dims_.in_dim, dims_.hidden);
    if (dims_.matrix_only) {
        require_matrix(params_[1], dims_.hidden, dims_.n_classes);
        return;
    }
    require_vector(params_[1], dims_.hidden);
    require_vector(params_[2], dims_.hidden);
    require_vector(params_[3], dims_.hidden);
    require_matrix(params_[4], dims_.hidden, dims_.n_classes);
    require_vector(params_[5], dims_.n_classes);
}

const Vector& MlpModel::vec(std::size_t index) const {
    if (dims_.matrix_only) {
        throw InvalidArgument("matrix-only model has no vector parameters");
    }
    return std::get<Vector>(params_[index].value);
}

bool operator==(const MlpModel& a, const MlpModel& b) {
    if (a.params_.size() != b.params_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
        if (a.params_[i].name != b.params_[i].name || a.params_[i].value != b.params_[i].value) {
            return false;
        }
    }
    return true;
}

MlpModel init_model(std::uint64_t seed, const MlpDims& dims) {
    if (dims.in_dim == 0 || dims.hidden == 0 || dims.n_classes == 0) {
        throw InvalidArgument("init_model: dimensions must be positive");
    }
    SplitMix64 rng(seed);
    Matrix w1 = random_matrix(rng, dims.in_dim, dims.hidden);
    Matrix w2 = random_matrix(rng, dims.hidden, dims.n_classes);

    std::vector<ParamTensor> params;
    params.push_back({"W1", Role::hidden_matrix, std::move(w1)});
    if (!dims.matrix_only) {
        params.push_back({"b1", Role::bias, Vector(dims.hidden)});
        params.push_back({"gain", Role::gain, filled(dims.hidden, 1.0)});
        params.push_back({"beta", Role::bias, Vector(dims.hidden)});
    }
    params.push_back({"W2", Role::hidden_matrix, std::move(w2)});
    if (!dims.matrix_only) {
        params.push_back({"b2", Role::bias, Vector(dims.n_classes)});
    }
    return MlpModel(dims, std::move(params));
}

ForwardResult forward(const MlpModel& model, const Batch& batch) {
    check_batch(model, batch);
    const auto& d = model.dims();
    const std::size_t n = batch.size();

    ForwardResult out;
    auto& cache = out.cache;

    Matrix z = matmul(batch.inputs, model.w1());
    if (d.matrix_only) {
        cache.h = z;
        cache.z_hat = std::move(z);
    } else {
        add_row_bias(z, model.b1());
        cache.z_hat = Matrix(n, d.hidden);
        cache.h = Matrix(n, d.hidden);
        cache.inv_std.resize(n);
        const auto width = static_cast<double>(d.hidden);
        for (std::size_t r = 0; r < n; ++r) {
            auto zr = z.row(r);
            double mean = 0.0;
            for (double v : zr) mean += v;
            mean /= width;
            double var = 0.0;
            for (double v : zr) var += (v - mean) * (v - mean);
            var /= width;
            const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
            cache.inv_std[r] = inv;
            for (std::size_t c = 0; c < d.hidden; ++c) {
                const double zh = (zr[c] - mean) * inv;
                cache.z_hat(r, c) = zh;
                cache.h(r, c) = zh * model.gain()[c] + model.beta()[c];
            }
        }
    }

    cache.act = cache.h;
    for (double& v : cache.act.data()) {
        v = std::max(v, 0.0);
    }

    const Matrix logits = logits_of(model, cache.act);
    cache.probs = Matrix(n, d.n_classes);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto lr = logits.row(r);
        const double mx = *std::max_element(lr.begin(), lr.end());
        double sum = 0.0;
        for (double v : lr) sum += std::exp(v - mx);
        const double log_sum = mx + std::log(sum);
        for (std::size_t c = 0; c < d.n_classes; ++c) {
            cache.probs(r, c) = std::exp(lr[c] - log_sum);
        }
        total += log_sum - lr[static_cast<std::size_t>(batch.labels[r])];
    }
    out.loss = total / static_cast<double>(n);
    if (!std::isfinite(out.loss)) {
        throw NonFiniteError("forward: non-finite loss");
    }
    return out;
}

LossAndGrads loss_and_grads(const MlpModel& model, const Batch& batch) {
    ForwardResult fwd = forward(model, batch);
    const auto& d = model.dims();
    const auto& cache = fwd.cache;
    const std::size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix d_logits = cache.probs;
    for (std::size_t r = 0; r < n; ++r) {
        d_logits(r, static_cast<std::size_t>(batch.labels[r])) -= 1.0;
    }
    for (double& v : d_logits.data()) {
        v *= inv_n;
    }

    Matrix d_w2 = matmul(transpose(cache.act), d_logits);
    Matrix d_h = matmul(d_logits, transpose(model.w2()));
    for (std::size_t i = 0; i < d_h.size(); ++i) {
        if (cache.h.data()[i] <= 0.0) {
            d_h.data()[i] = 0.0;
        }
    }

    LossAndGrads out;
    out.loss = fwd.loss;
    if (d.matrix_only) {
        out.grads.emplace_back(matmul(transpose(batch.inputs), d_h));
        out.grads.emplace_back(std::move(d_w2));
        return out;
    }

    Vector d_gain(d.hidden);
    Matrix d_z(n, d.hidden);
    const auto width = static_cast<double>(d.hidden);
    std::vector<double> d_zhat(d.hidden);
    for (std::size_t r = 0; r < n; ++r) {
        double mean_dzh = 0.0;
        double mean_dzh_zh = 0.0;
        for (std::size_t c = 0; c < d.hidden; ++c) {
            const double zh = cache.z_hat(r, c);
            d_gain[c] += d_h(r, c) * zh;
            d_zhat[c] = d_h(r, c) * model.gain()[c];
            mean_dzh += d_zhat[c];
            mean_dzh_zh += d_zhat[c] * zh;
        }
        mean_dzh /= width;
        mean_dzh_zh /= width;
        for (std::size_t c = 0; c < d.hidden; ++c) {
            d_z(r, c) = cache.inv_std[r] * (d_zhat[c] - mean_dzh - cache.z_hat(r, c) * mean_dzh_zh);
        }
    }

    out.grads.emplace_back(matmul(transpose(batch.inputs), d_z));
    out.grads.emplace_back(column_sums(d_z));
    out.grads.emplace_back(std::move(d_gain));
    out.grads.emplace_back(column_sums(d_h));
    out.grads.emplace_back(std::move(d_w2));
    out.grads.emplace_back(column_sums(d_logits));
    return out;
}

double accuracy(const MlpModel& model, const Batch& batch) {
    const auto fwd = forward(model, batch);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto pr = fwd.cache.probs.row(r);
        const auto best = static_cast<std::size_t>(std::max_element(pr.begin(), pr.end()) - pr.begin());
        if (best == static_cast<std::size_t>(batch.labels[r])) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}    // namespace muonkit

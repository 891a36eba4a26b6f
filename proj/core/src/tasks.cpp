#include "muonkit/tasks.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <cmath>
#include <iterator>

#include "muonkit/error.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {

std::string_view to_string(TaskKind kind) noexcept {
    switch (kind) {
        case TaskKind::gaussian_clusters: return "gaussian_clusters";
        case TaskKind::char_bigram: return "char_bigram";
    }
    return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
    if (name == "gaussian_clusters") return TaskKind::gaussian_clusters;
    if (name == "char_bigram") return TaskKind::char_bigram;
    throw InvalidArgument("unknown task '" + std::string(name) + "' (expected gaussian_clusters or char_bigram)");
}

void TaskSpec::validate() const {
    if (n_train < 1 || n_val < 1) {
        throw InvalidArgument("task: n_train and n_val must be >= 1");
    }
    if (kind == TaskKind::gaussian_clusters) {
        if (in_dim < 1 || n_classes < 2) {
            throw InvalidArgument("gaussian_clusters: need in_dim >= 1 and n_classes >= 2");
        }
        if (!(separation >= 0.0) || !std::isfinite(separation)) {
            throw InvalidArgument("gaussian_clusters: separation must be finite and >= 0");
        }
    } else if (data_file.empty()) {
        throw InvalidArgument("char_bigram: a data file is required");
    }
}

namespace {

struct Samples {
    std::vector<double> inputs;    // row-major
    std::vector<int> labels;
};

std::vector<Batch> to_batches(const Samples& s, std::size_t width, std::size_t begin, std::size_t count,
                              std::size_t batch_size, bool keep_remainder) {
    std::vector<Batch> out;
    std::size_t offset = 0;
    while (offset < count) {
        const std::size_t take = std::min(batch_size, count - offset);
        if (take < batch_size && !keep_remainder && !out.empty()) {
            break;
        }
        const auto first = begin + offset;
        std::vector<double> x(s.inputs.begin() + static_cast<std::ptrdiff_t>(first * width),
                              s.inputs.begin() + static_cast<std::ptrdiff_t>((first + take) * width));
        std::vector<int> y(s.labels.begin() + static_cast<std::ptrdiff_t>(first),
                           s.labels.begin() + static_cast<std::ptrdiff_t>(first + take));
        out.push_back(Batch{Matrix(take, width, std::move(x)), std::move(y)});
        offset += take;
    }
    return out;
}

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot read text file '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}    // namespace

TaskData make_task(const TaskSpec& spec, std::size_t batch_size) {
    spec.validate();
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }

    Samples s;
    TaskData data;
    const std::size_t total = spec.n_train + spec.n_val;

    if (spec.kind == TaskKind::gaussian_clusters) {
        SplitMix64 rng(spec.seed);
        std::vector<double> means(spec.n_classes * spec.in_dim);
        for (double& m : means) {
            m = rng.normal() * spec.separation;
        }
        s.inputs.reserve(total * spec.in_dim);
        s.labels.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
            const auto label = rng.below(spec.n_classes);
            s.labels.push_back(static_cast<int>(label));
            for (std::size_t j = 0; j < spec.in_dim; ++j) {
                s.inputs.push_back(means[label * spec.in_dim + j] + rng.normal());
            }
        }
        data.in_dim = spec.in_dim;
        data.n_classes = spec.n_classes;
    } else {
        const auto text = read_bytes(spec.data_file);
        if (text.size() < 2) {
            throw InvalidArgument("char_bigram: '" + spec.data_file + "' needs at least two bytes");
        }
        std::array<int, 256> index{};
        index.fill(-1);
        for (unsigned char b : text) {
            index[b] = 0;
        }
        for (int b = 0; b < 256; ++b) {
            if (index[static_cast<std::size_t>(b)] == 0) {
                index[static_cast<std::size_t>(b)] = static_cast<int>(data.vocab.size());
                data.vocab.push_back(static_cast<unsigned char>(b));
            }
        }
        const std::size_t vocab = data.vocab.size();
        data.in_dim = vocab;
        data.n_classes = vocab;

        SplitMix64 rng(spec.seed);
        s.inputs.assign(total * vocab, 0.0);
        s.labels.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
            const auto pos = rng.below(text.size() - 1);
            const auto cur = static_cast<std::size_t>(index[text[pos]]);
            s.inputs[i * vocab + cur] = 1.0;
            s.labels.push_back(index[text[pos + 1]]);
        }
    }

    data.train = to_batches(s, data.in_dim, 0, spec.n_train, batch_size, false);
    data.val = to_batches(s, data.in_dim, spec.n_train, spec.n_val, batch_size, true);
    return data;
}

double mean_loss(const MlpModel& model, const std::vector<Batch>& batches) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& b : batches) {
        total += loss(model, b) * static_cast<double>(b.size());
        count += b.size();
    }
    if (count == 0) {
        throw InvalidArgument("mean_loss: no samples");
    }
    return total / static_cast<double>(count);
}

Batch concat(const std::vector<Batch>& batches) {
    if (batches.empty()) {
        throw InvalidArgument("concat: no batches");
    }
    const std::size_t width = batches.front().inputs.cols();
    std::vector<double> x;
    std::vector<int> y;
    for (const auto& b : batches) {
        if (b.inputs.cols() != width) {
            throw ShapeError("concat: batches differ in width");
        }
        x.insert(x.end(), b.inputs.data().begin(), b.inputs.data().end());
        y.insert(y.end(), b.labels.begin(), b.labels.end());
    }
    const std::size_t rows = y.size();
    return Batch{Matrix(rows, width, std::move(x)), std::move(y)};
}

}    // namespace muonkit

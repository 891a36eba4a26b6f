#pragma once

// Seeded synthetic classification tasks.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "muonkit/models.hpp"

namespace muonkit {

enum class TaskKind { gaussian_clusters, char_bigram };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
    TaskKind kind = TaskKind::gaussian_clusters;
    std::size_t n_train = 8192;
    std::size_t n_val = 1024;
    /// gaussian_clusters only; char_bigram derives both from the vocabulary.
    std::size_t in_dim = 32;
    std::size_t n_classes = 8;
    /// Standard deviation of the class means; samples have unit noise.
    double separation = 0.5;
    /// char_bigram input text.
    std::string data_file;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TaskData {
    std::vector<Batch> train;
    std::vector<Batch> val;
    std::size_t in_dim = 0;
    std::size_t n_classes = 0;
    /// char_bigram: byte value of each class index.
    std::vector<unsigned char> vocab;
};

/// gaussian_clusters: class means ~ N(0, separation²·I), then n_train and
/// n_val samples (label uniform, x = mean + N(0, I)), all from one splitmix64
/// stream. char_bigram: (byte, next byte) pairs at n_train + n_val uniformly
/// drawn positions of the file, one-hot over the sorted observed bytes.
///
/// Training samples are cut into full batches of `batch_size` (a remainder is
/// dropped unless it is the only batch); validation keeps every sample.
TaskData make_task(const TaskSpec& spec, std::size_t batch_size);

/// Sample-weighted mean loss over a list of batches.
double mean_loss(const MlpModel& model, const std::vector<Batch>& batches);

/// Row-concatenation of equally wide batches.
Batch concat(const std::vector<Batch>& batches);

}    // namespace muonkit

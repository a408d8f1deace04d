#pragma once

#include "kdlab/data.hpp"
#include "kdlab/loss.hpp"
#include "kdlab/model.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace kdlab::distill {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Minibatch SGD settings. The learning rate warms up linearly over the
/// first warmup_epochs, then is divided by each schedule factor once its
/// epoch is reached.
struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;
    double lr = 0.1;
    double momentum = 0.9;
    bool nesterov = true;
    std::vector<std::pair<int, double>> schedule;  // (epoch, divide-by)
    int warmup_epochs = 0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// min(128, n/4), at least 1.
int default_batch_size(int n);

std::int64_t steps_per_epoch(int n, int batch_size);

/// Learning rate used for the update at 0-based global step `step`.
double learning_rate(const TrainConfig& cfg, std::int64_t step, std::int64_t steps_per_epoch);

/// Teacher checkpoints ordered by the step index at which each was taken.
struct TeacherTrajectory {
    std::vector<model::Checkpoint> checkpoints;
    std::vector<std::int64_t> times;

    void validate() const;
    std::size_t size() const noexcept { return checkpoints.size(); }
};

/// Uses each checkpoint's step_index as its time.
TeacherTrajectory make_trajectory(std::vector<model::Checkpoint> checkpoints);

/// Index of the checkpoint with the smallest time strictly greater than t;
/// the last checkpoint when t is at or beyond the final time.
std::size_t nearest_index(const TeacherTrajectory& traj, std::int64_t t);
const model::Checkpoint& nearest_checkpoint(const TeacherTrajectory& traj, std::int64_t t);

/// Keeps checkpoints whose epoch index is a multiple of period_epochs, plus
/// the final checkpoint.
TeacherTrajectory thin_trajectory(const TeacherTrajectory& traj, int period_epochs);

struct TeacherSelection {
    const model::Checkpoint* checkpoint = nullptr;
    std::int64_t time = -1;
};

/// Supervising teacher for a 0-based student step.
using TeacherProvider = std::function<TeacherSelection(std::int64_t step)>;

struct MetricRow {
    int epoch = 0;
    std::int64_t step = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;  // NaN without a test split
    std::int64_t teacher_time = -1;
};

struct RunArtifact {
    model::Checkpoint final_checkpoint;
    std::vector<model::Checkpoint> epoch_checkpoints;  // after epochs 1..E
    std::vector<MetricRow> metrics;
};

/// Class predicted from a logit vector: sign for a single output, otherwise
/// the first maximal index.
int predicted_class(const Vector& logits);

double accuracy(const model::Checkpoint& c, const data::LabeledDataset& ds);

/// Minibatch SGD with (Nesterov) momentum on the batch-mean loss. Shuffling
/// is drawn from cfg.seed, so the run is a pure function of its inputs.
/// A provider is required for distillation losses.
RunArtifact train(const model::Checkpoint& initial, const data::LabeledDataset& ds, const LossKind& kind,
                  const TeacherProvider* teacher, const TrainConfig& cfg,
                  const data::LabeledDataset* test = nullptr);

/// Student distilled from a fixed, fully trained teacher.
RunArtifact run_offline_kd(const model::MlpSpec& student, const model::Checkpoint& teacher_final,
                           const data::LabeledDataset& ds, const LossKind& kind, const TrainConfig& cfg,
                           const data::LabeledDataset* test = nullptr);

/// Student supervised at step t by the nearest later teacher checkpoint of
/// the trajectory thinned to one checkpoint per update_period_epochs.
RunArtifact run_online_kd(const model::MlpSpec& student, const TeacherTrajectory& traj,
                          const data::LabeledDataset& ds, const LossKind& kind, const TrainConfig& cfg,
                          int update_period_epochs, const data::LabeledDataset* test = nullptr);

/// Mean of τ-softened predictions (probability space) of the last `window`
/// checkpoints taken at or before t. Falls back to the first checkpoint when
/// none precedes t.
Matrix average_teacher_predictions(const TeacherTrajectory& traj, std::int64_t t, int window, const Matrix& xs,
                                   double tau);

/// Fraction of rows of xs on which both models predict the same class.
double fidelity(const model::Checkpoint& student, const model::Checkpoint& teacher, const Matrix& xs);

}  // namespace kdlab::distill

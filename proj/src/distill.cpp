#include "kdlab/distill.hpp"

#include "kdlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace kdlab::distill {

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidSpec("epochs must be >= 0");
    if (batch_size < 1) throw InvalidSpec("batch_size must be >= 1");
    if (!(lr >= 0.0)) throw InvalidSpec("lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidSpec("momentum must lie in [0, 1)");
    if (warmup_epochs < 0) throw InvalidSpec("warmup_epochs must be >= 0");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k].second > 0.0)) throw InvalidSpec("schedule divisors must be > 0");
        if (k > 0 && schedule[k].first <= schedule[k - 1].first)
            throw InvalidSpec("schedule epochs must be strictly increasing");
    }
}

int default_batch_size(int n) { return std::max(1, std::min(128, n / 4)); }

std::int64_t steps_per_epoch(int n, int batch_size) { return (n + batch_size - 1) / batch_size; }

double learning_rate(const TrainConfig& cfg, std::int64_t step, std::int64_t per_epoch) {
    double lr = cfg.lr;
    const std::int64_t warmup_steps = static_cast<std::int64_t>(cfg.warmup_epochs) * per_epoch;
    if (step < warmup_steps) lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    const std::int64_t epoch = per_epoch > 0 ? step / per_epoch : 0;
    for (const auto& [at, divisor] : cfg.schedule)
        if (epoch >= at) lr /= divisor;
    return lr;
}

void TeacherTrajectory::validate() const {
    if (checkpoints.empty()) throw InvalidSpec("teacher trajectory is empty");
    if (checkpoints.size() != times.size()) throw InvalidSpec("teacher trajectory times misaligned");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (times[k] <= times[k - 1]) throw InvalidSpec("teacher checkpoint times must be strictly increasing");
}

TeacherTrajectory make_trajectory(std::vector<model::Checkpoint> checkpoints) {
    TeacherTrajectory traj;
    for (const auto& c : checkpoints) traj.times.push_back(c.step_index);
    traj.checkpoints = std::move(checkpoints);
    traj.validate();
    return traj;
}

std::size_t nearest_index(const TeacherTrajectory& traj, std::int64_t t) {
    traj.validate();
    const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    if (it == traj.times.end()) return traj.size() - 1;
    return static_cast<std::size_t>(it - traj.times.begin());
}

const model::Checkpoint& nearest_checkpoint(const TeacherTrajectory& traj, std::int64_t t) {
    return traj.checkpoints[nearest_index(traj, t)];
}

TeacherTrajectory thin_trajectory(const TeacherTrajectory& traj, int period_epochs) {
    traj.validate();
    if (period_epochs < 1) throw InvalidSpec("teacher update period must be >= 1 epoch");
    TeacherTrajectory out;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const bool last = k + 1 == traj.size();
        if (last || traj.checkpoints[k].epoch_index % period_epochs == 0) {
            out.checkpoints.push_back(traj.checkpoints[k]);
            out.times.push_back(traj.times[k]);
        }
    }
    return out;
}

int predicted_class(const Vector& logits) {
    if (logits.size() == 1) return logits(0) > 0.0 ? 1 : 0;
    int best = 0;
    for (Eigen::Index y = 1; y < logits.size(); ++y)
        if (logits(y) > logits(best)) best = static_cast<int>(y);
    return best;
}

double accuracy(const model::Checkpoint& c, const data::LabeledDataset& ds) {
    if (ds.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    const Matrix logits = model::forward_batch(c, ds.inputs);
    int correct = 0;
    for (int i = 0; i < ds.size(); ++i)
        if (predicted_class(logits.row(i).transpose()) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / ds.size();
}

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
    return out;
}

}  // namespace

RunArtifact train(const model::Checkpoint& initial, const data::LabeledDataset& ds, const LossKind& kind,
                  const TeacherProvider* teacher, const TrainConfig& cfg, const data::LabeledDataset* test) {
    cfg.validate();
    kind.validate();
    if (ds.size() < 1) throw InvalidSpec("training set is empty");
    detail::require_dims(ds.input_dim() == initial.spec.input_dim(), "dataset width does not match model input");
    if (kind.needs_teacher() && (teacher == nullptr || !*teacher))
        throw MissingTeacher("loss '" + std::string(to_string(kind.tag)) + "' needs a teacher");

    const int n = ds.size();
    const int d = initial.spec.output_dim();
    const Matrix hard = kind.needs_hard_targets() ? data::hard_targets(ds, d).values : Matrix();
    const std::int64_t per_epoch = steps_per_epoch(n, cfg.batch_size);

    RunArtifact run;
    model::Checkpoint current = initial;
    model::ParamVector velocity = model::ParamVector::Zero(current.params.size());
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    // Teacher logits on the whole training set, recomputed when the teacher changes.
    const model::Checkpoint* cached_teacher = nullptr;
    std::int64_t cached_time = std::numeric_limits<std::int64_t>::min();
    Matrix teacher_logits;

    std::int64_t step = initial.step_index;
    const std::int64_t first_step = step;
    std::int64_t teacher_time = -1;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            const std::vector<int> rows(order.begin() + start, order.begin() + stop);

            LossTargets targets;
            if (kind.needs_hard_targets()) targets.hard_targets = gather_rows(hard, rows);
            if (kind.needs_teacher()) {
                const TeacherSelection sel = (*teacher)(step - first_step);
                if (sel.checkpoint == nullptr) throw MissingTeacher("teacher provider returned no checkpoint");
                detail::require_dims(sel.checkpoint->spec.output_dim() == d, "teacher and student output widths differ");
                if (sel.checkpoint != cached_teacher || sel.time != cached_time) {
                    teacher_logits = model::forward_batch(*sel.checkpoint, ds.inputs);
                    cached_teacher = sel.checkpoint;
                    cached_time = sel.time;
                }
                teacher_time = sel.time;
                targets.teacher_logits = gather_rows(teacher_logits, rows);
            }

            const Matrix batch = gather_rows(ds.inputs, rows);
            const auto lg = model::loss_and_grad(current, batch, kind, targets);
            loss_sum += lg.loss * static_cast<double>(rows.size());

            const double lr = learning_rate(cfg, step - first_step, per_epoch);
            velocity = cfg.momentum * velocity + lg.grad;
            if (cfg.nesterov)
                current.params -= lr * (lg.grad + cfg.momentum * velocity);
            else
                current.params -= lr * velocity;
            ++step;
        }

        current.step_index = step;
        current.epoch_index = initial.epoch_index + epoch + 1;
        run.epoch_checkpoints.push_back(current);

        MetricRow row;
        row.epoch = static_cast<int>(current.epoch_index);
        row.step = step;
        row.loss = loss_sum / n;
        row.train_acc = accuracy(current, ds);
        row.test_acc = test != nullptr ? accuracy(current, *test) : std::numeric_limits<double>::quiet_NaN();
        row.teacher_time = kind.needs_teacher() ? teacher_time : -1;
        run.metrics.push_back(row);
    }
    run.final_checkpoint = current;
    return run;
}

RunArtifact run_offline_kd(const model::MlpSpec& student, const model::Checkpoint& teacher_final,
                           const data::LabeledDataset& ds, const LossKind& kind, const TrainConfig& cfg,
                           const data::LabeledDataset* test) {
    const TeacherProvider provider = [&teacher_final](std::int64_t) {
        return TeacherSelection{&teacher_final, teacher_final.step_index};
    };
    return train(model::init(student), ds, kind, &provider, cfg, test);
}

RunArtifact run_online_kd(const model::MlpSpec& student, const TeacherTrajectory& traj,
                          const data::LabeledDataset& ds, const LossKind& kind, const TrainConfig& cfg,
                          int update_period_epochs, const data::LabeledDataset* test) {
    const TeacherTrajectory thinned = thin_trajectory(traj, update_period_epochs);
    const TeacherProvider provider = [&thinned](std::int64_t step) {
        const std::size_t k = nearest_index(thinned, step);
        return TeacherSelection{&thinned.checkpoints[k], thinned.times[k]};
    };
    return train(model::init(student), ds, kind, &provider, cfg, test);
}

Matrix average_teacher_predictions(const TeacherTrajectory& traj, std::int64_t t, int window, const Matrix& xs,
                                   double tau) {
    traj.validate();
    if (window < 1) throw InvalidSpec("averaging window must be >= 1");
    const auto upto = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    std::size_t end = static_cast<std::size_t>(upto - traj.times.begin());
    if (end == 0) end = 1;
    const std::size_t begin = end > static_cast<std::size_t>(window) ? end - window : 0;

    Matrix sum;
    for (std::size_t k = begin; k < end; ++k) {
        const Matrix soft = data::soft_targets(model::forward_batch(traj.checkpoints[k], xs), tau).values;
        if (k == begin)
            sum = soft;
        else
            sum += soft;
    }
    return sum / static_cast<double>(end - begin);
}

double fidelity(const model::Checkpoint& student, const model::Checkpoint& teacher, const Matrix& xs) {
    detail::require_dims(student.spec.output_dim() == teacher.spec.output_dim(),
                         "fidelity: student and teacher output widths differ");
    if (xs.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    const Matrix fs = model::forward_batch(student, xs);
    const Matrix ft = model::forward_batch(teacher, xs);
    int agree = 0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        if (predicted_class(fs.row(i).transpose()) == predicted_class(ft.row(i).transpose())) ++agree;
    return static_cast<double>(agree) / static_cast<double>(xs.rows());
}

}  // namespace kdlab::distill

#include "kdlab/harness/recipes.hpp"

#include "kdlab/bounds.hpp"
#include "kdlab/error.hpp"
#include "kdlab/kernel_machine.hpp"
#include "kdlab/linalg.hpp"
#include "kdlab/model.hpp"
#include "kdlab/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace kdlab::harness {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector flatten(const Matrix& m) { return data::TargetMatrix{m, data::TargetKind::soft}.flatten(); }

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

const TrainSection& teacher_section(const ExperimentConfig& cfg) {
    return cfg.teacher_train ? *cfg.teacher_train : cfg.train;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return kNaN;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double final_test_acc(const distill::RunArtifact& run) {
    return run.metrics.empty() ? kNaN : run.metrics.back().test_acc;
}

data::LabeledDataset head(const data::LabeledDataset& ds, int count) {
    std::vector<int> rows(static_cast<std::size_t>(count));
    std::iota(rows.begin(), rows.end(), 0);
    return data::subset(ds, rows);
}

enum class Mode { no_kd, offline, online };

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::no_kd: return "no_kd";
        case Mode::offline: return "offline";
        case Mode::online: return "online";
    }
    return "unknown";
}

// Student runs that share a `run` index share initialization and minibatch order.
distill::RunArtifact fit_student(const ExperimentConfig& cfg, const Task& task, const distill::RunArtifact& teacher,
                                 Mode mode, const LossKind& kd, int period, std::uint64_t run) {
    const model::MlpSpec spec = net_spec(cfg.student, derive_seed(cfg.seed, "student_init", run));
    const distill::TrainConfig tc = train_config(cfg.train, task.train.size(), derive_seed(cfg.seed, "student_sgd", run));
    switch (mode) {
        case Mode::no_kd:
            return distill::train(model::init(spec), task.train, LossKind{cfg.params.student_loss}, nullptr, tc,
                                  &task.test);
        case Mode::offline:
            return distill::run_offline_kd(spec, teacher.final_checkpoint, task.train, kd, tc, &task.test);
        case Mode::online:
            return distill::run_online_kd(spec, distill::make_trajectory(teacher.epoch_checkpoints), task.train, kd,
                                          tc, period, &task.test);
    }
    throw Error("unknown student mode");
}

LossKind kd_kind(const ExperimentConfig& cfg) {
    LossKind k{cfg.params.kd_loss, cfg.params.tau, 1.0};
    if (k.tag == LossTag::mixture) k.alpha = 0.5;
    return k;
}

void add_complexity_row(CsvTable& t, std::int64_t epoch, const std::string& kind, const kernel::ComplexityReport& r) {
    t.add_row({epoch, kind, r.raw, r.adjusted, r.adjusted_star, r.normalized, r.trace_k, r.jitter_used});
}

// ---------------------------------------------------------------------------

void complexity_curve(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    const RecipeParams& p = cfg.params;
    const distill::RunArtifact teacher = fit_teacher(cfg, task, 0);
    const distill::TeacherTrajectory traj = distill::make_trajectory(teacher.epoch_checkpoints);
    const distill::RunArtifact student = fit_student(cfg, task, teacher, Mode::no_kd, LossKind{}, 1, 0);

    std::vector<model::Checkpoint> checkpoints{model::init(student.final_checkpoint.spec)};
    checkpoints.insert(checkpoints.end(), student.epoch_checkpoints.begin(), student.epoch_checkpoints.end());
    std::vector<int> epochs = p.eval_epochs;
    if (epochs.empty()) {
        epochs.resize(checkpoints.size());
        std::iota(epochs.begin(), epochs.end(), 0);
    }
    std::sort(epochs.begin(), epochs.end());
    epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

    const data::LabeledDataset eval = head(task.test, p.eval_size);
    const Matrix& x = eval.inputs;
    const int m = eval.size();
    const int d = cfg.student.widths.back();
    const Vector y_random =
        data::random_targets(m, d, d == 1 ? data::TargetKind::signed_binary : data::TargetKind::one_hot,
                             derive_seed(cfg.seed, "random_targets"))
            .flatten();
    const Vector y_dataset = data::hard_targets(eval, d).flatten();
    const Vector y_offline = data::soft_targets(model::forward_batch(teacher.final_checkpoint, x), p.tau).flatten();

    CsvTable table({"epoch", "target_kind", "raw", "adjusted", "adjusted_star", "normalized", "trace_k", "jitter"});
    CsvTable kernel_table({"epoch", "condition_number", "student_test_acc", "online_teacher_epoch"});
    bool random_ge_dataset = true;
    double online_minus_offline_epoch1 = kNaN;

    for (int e : epochs) {
        const model::Checkpoint& ck = checkpoints.at(static_cast<std::size_t>(e));
        const ntk::NtkMatrix k = ntk::batch_kernel(ck, x);
        const Vector f0 = flatten(model::forward_batch(ck, x));
        const std::size_t online_idx = distill::nearest_index(traj, ck.step_index - 1);
        const model::Checkpoint& online = traj.checkpoints[online_idx];
        const Vector y_online = data::soft_targets(model::forward_batch(online, x), p.tau).flatten();

        const auto r_random = kernel::adjusted_complexity(k.base, y_random, f0, m);
        const auto r_dataset = kernel::adjusted_complexity(k.base, y_dataset, f0, m);
        const auto r_offline = kernel::adjusted_complexity(k.base, y_offline, f0, m);
        const auto r_online = kernel::adjusted_complexity(k.base, y_online, f0, m);
        add_complexity_row(table, e, "random", r_random);
        add_complexity_row(table, e, "dataset", r_dataset);
        add_complexity_row(table, e, "offline_teacher", r_offline);
        add_complexity_row(table, e, "online_teacher", r_online);
        if (p.average_window > 0) {
            const Vector y_avg =
                flatten(distill::average_teacher_predictions(traj, traj.times[online_idx], p.average_window, x, p.tau));
            add_complexity_row(table, e, "online_teacher_avg", kernel::adjusted_complexity(k.base, y_avg, f0, m));
        }

        if (!(r_random.adjusted >= r_dataset.adjusted)) random_ge_dataset = false;
        if (e == 1) online_minus_offline_epoch1 = r_online.adjusted - r_offline.adjusted;
        kernel_table.add_row({static_cast<std::int64_t>(e), linalg::condition_number(k.base),
                              e == 0 ? distill::accuracy(ck, task.test) : student.metrics[e - 1].test_acc,
                              online.epoch_index});
    }

    rep.tables.emplace_back("complexity", std::move(table));
    rep.tables.emplace_back("kernel", std::move(kernel_table));
    rep.tables.emplace_back("teacher_metrics", metrics_table(teacher.metrics));
    rep.tables.emplace_back("student_metrics", metrics_table(student.metrics));
    rep.summary.emplace_back("random_ge_dataset_all_epochs", random_ge_dataset ? 1.0 : 0.0);
    rep.summary.emplace_back("online_minus_offline_epoch1", online_minus_offline_epoch1);
    rep.summary.emplace_back("teacher_test_acc", final_test_acc(teacher));
    rep.summary.emplace_back("student_test_acc", final_test_acc(student));
}

void online_vs_offline(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    const LossKind kd = kd_kind(cfg);
    CsvTable table({"seed", "no_kd", "offline", "online", "teacher"});
    std::vector<double> no_kd, offline, online, teacher_acc;
    for (std::uint64_t s : cfg.params.seeds) {
        const distill::RunArtifact teacher = fit_teacher(cfg, task, s);
        const auto a = fit_student(cfg, task, teacher, Mode::no_kd, kd, 1, s);
        const auto b = fit_student(cfg, task, teacher, Mode::offline, kd, 1, s);
        const auto c = fit_student(cfg, task, teacher, Mode::online, kd, 1, s);
        no_kd.push_back(final_test_acc(a));
        offline.push_back(final_test_acc(b));
        online.push_back(final_test_acc(c));
        teacher_acc.push_back(final_test_acc(teacher));
        table.add_row({as_int(s), no_kd.back(), offline.back(), online.back(), teacher_acc.back()});
        const std::string tag = "_seed" + std::to_string(s);
        rep.tables.emplace_back("metrics" + tag + "_teacher", metrics_table(teacher.metrics));
        rep.tables.emplace_back("metrics" + tag + "_no_kd", metrics_table(a.metrics));
        rep.tables.emplace_back("metrics" + tag + "_offline", metrics_table(b.metrics));
        rep.tables.emplace_back("metrics" + tag + "_online", metrics_table(c.metrics));
    }
    rep.tables.emplace(rep.tables.begin(), "online_vs_offline", std::move(table));
    rep.summary.emplace_back("mean_no_kd", mean(no_kd));
    rep.summary.emplace_back("mean_offline", mean(offline));
    rep.summary.emplace_back("mean_online", mean(online));
    rep.summary.emplace_back("mean_teacher", mean(teacher_acc));
}

void temperature_sweep(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    const RecipeParams& p = cfg.params;
    const distill::RunArtifact teacher = fit_teacher(cfg, task, 0);
    const distill::RunArtifact student = fit_student(cfg, task, teacher, Mode::no_kd, LossKind{}, 1, 0);
    const data::LabeledDataset eval = head(task.test, p.eval_size);
    const int m = eval.size();
    const ntk::NtkMatrix k = ntk::batch_kernel(student.final_checkpoint, eval.inputs);
    const Vector f0 = flatten(model::forward_batch(student.final_checkpoint, eval.inputs));
    const Matrix logits = model::forward_batch(teacher.final_checkpoint, eval.inputs);

    std::vector<double> taus = p.taus;
    std::sort(taus.begin(), taus.end());
    CsvTable table({"tau", "target_norm", "raw", "adjusted", "adjusted_star", "normalized", "trace_k", "jitter"});
    bool norms_decreasing = true;
    bool adjusted_decreasing = true;
    double prev_norm = std::numeric_limits<double>::infinity();
    double prev_adjusted = std::numeric_limits<double>::infinity();
    for (double tau : taus) {
        const Vector y = data::soft_targets(logits, tau).flatten();
        const auto r = kernel::adjusted_complexity(k.base, y, f0, m);
        const double norm = y.norm();
        if (!(norm < prev_norm)) norms_decreasing = false;
        if (!(r.adjusted < prev_adjusted)) adjusted_decreasing = false;
        prev_norm = norm;
        prev_adjusted = r.adjusted;
        table.add_row({tau, norm, r.raw, r.adjusted, r.adjusted_star, r.normalized, r.trace_k, r.jitter_used});
    }
    rep.tables.emplace_back("temperature", std::move(table));
    rep.tables.emplace_back("teacher_metrics", metrics_table(teacher.metrics));
    rep.tables.emplace_back("student_metrics", metrics_table(student.metrics));
    rep.summary.emplace_back("target_norm_strictly_decreasing", norms_decreasing ? 1.0 : 0.0);
    rep.summary.emplace_back("adjusted_strictly_decreasing", adjusted_decreasing ? 1.0 : 0.0);
}

void ntk_similarity(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    const RecipeParams& p = cfg.params;
    const LossKind kd = kd_kind(cfg);
    const Matrix probe_x = head(task.train, p.probe_batch).inputs;
    CsvTable table({"run_id", "ntk_sim_mean", "ntk_sim_se", "fidelity", "test_acc"});
    for (std::uint64_t s : p.seeds) {
        const distill::RunArtifact teacher = fit_teacher(cfg, task, s);
        for (Mode mode : {Mode::no_kd, Mode::offline, Mode::online}) {
            const auto run = fit_student(cfg, task, teacher, mode, kd, 1, s);
            const auto sim = ntk::ntk_similarity(run.final_checkpoint, teacher.final_checkpoint, probe_x,
                                                 p.num_probes, derive_seed(cfg.seed, "probes", s));
            const double fid = distill::fidelity(run.final_checkpoint, teacher.final_checkpoint, task.train.inputs);
            table.add_row({std::string(mode_name(mode)) + "_seed" + std::to_string(s), sim.mean, sim.std_error, fid,
                           final_test_acc(run)});
        }
    }
    rep.tables.emplace_back("similarity", std::move(table));
}

struct BoundChoice {
    bounds::BoundReport report;
    bool valid = false;
};

template <typename Fn>
bounds::BoundReport best_over_gammas(const std::vector<double>& gammas, double delta, Fn&& bound_at) {
    BoundChoice best;
    for (double g : gammas) {
        const bounds::BoundReport r = bound_at(bounds::MarginParams{g, delta});
        if (!best.valid || r.total < best.report.total) best = {r, true};
    }
    return best.report;
}

double sign_error(const Vector& f, const std::vector<int>& labels, std::size_t begin, std::size_t end) {
    if (end <= begin) return kNaN;
    std::size_t wrong = 0;
    for (std::size_t i = begin; i < end; ++i) {
        const double y = labels[i] == 1 ? 1.0 : -1.0;
        if (y * f(static_cast<Eigen::Index>(i)) <= 0.0) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(end - begin);
}

void bound_check(const ExperimentConfig& cfg, RunReport& rep) {
    const RecipeParams& p = cfg.params;
    const std::vector<double> gammas = effective_gammas(p);
    const model::Checkpoint anchor = model::init(net_spec(cfg.student, derive_seed(cfg.seed, "anchor")));
    const int n = cfg.dataset.n;

    std::optional<model::Checkpoint> teacher;
    if (p.distill_bound) {
        data::SyntheticSpec spec = dataset_spec(cfg);
        spec.sample_seed = derive_seed(cfg.seed, "bound_teacher_sample");
        auto [train, test] = data::make_split(spec, cfg.dataset.n_test);
        const model::MlpSpec tspec = net_spec(cfg.teacher, derive_seed(cfg.seed, "teacher_init"));
        const distill::TrainConfig tc =
            train_config(teacher_section(cfg), train.size(), derive_seed(cfg.seed, "teacher_sgd"));
        teacher = distill::train(model::init(tspec), train, LossKind{p.teacher_loss}, nullptr, tc, &test)
                      .final_checkpoint;
    }

    CsvTable table({"trial", "kind", "gamma", "empirical_margin_term", "complexity_term", "confidence_term",
                    "teacher_risk", "total", "m0", "kappa", "complexity", "test_error", "holds"});
    int label_holds = 0;
    int distill_holds = 0;
    std::vector<double> label_totals, label_errors;
    for (int trial = 0; trial < p.trials; ++trial) {
        data::SyntheticSpec spec = dataset_spec(cfg);
        spec.sample_seed = derive_seed(cfg.seed, "bound_trial", static_cast<std::uint64_t>(trial));
        const auto [train, test] = data::make_split(spec, cfg.dataset.n_test);

        const ntk::NtkMatrix k = ntk::batch_kernel(anchor, train.inputs);
        const Matrix k_cross = ntk::cross_kernel(anchor, test.inputs, train.inputs);
        const double trace = linalg::trace(k.base);
        Matrix pooled(train.size() + test.size(), train.input_dim());
        pooled << train.inputs, test.inputs;
        const double kappa = bounds::estimate_kappa(anchor, pooled);
        const double lambda = kernel::default_lambda(k.base);

        const Vector y = data::hard_targets(train, 1).flatten();
        const double complexity = kernel::supervision_complexity(k.base, y);
        const auto sol = kernel::ridge_solve(k.base, y, kernel::KernelRidgeConfig{lambda, 1});
        const Vector f_test = kernel::evaluate(sol, k_cross);
        const double test_error = sign_error(f_test, test.labels, 0, test.labels.size());
        const auto r = best_over_gammas(gammas, p.delta, [&](const bounds::MarginParams& mp) {
            return bounds::binary_bound(sol.train_predictions, y, complexity, trace, kappa, n, mp);
        });
        const bool holds = r.total >= test_error;
        label_holds += holds ? 1 : 0;
        label_totals.push_back(r.total);
        label_errors.push_back(test_error);
        table.add_row({static_cast<std::int64_t>(trial), std::string("labels"), r.gamma, r.empirical_margin_term,
                       r.complexity_term, r.confidence_term, 0.0, r.total, static_cast<std::int64_t>(r.m0), kappa,
                       complexity, test_error, static_cast<std::int64_t>(holds)});

        if (teacher) {
            const std::size_t half = test.labels.size() / 2;
            const Vector teacher_test = model::forward_batch(*teacher, test.inputs).col(0);
            const double teacher_risk = sign_error(teacher_test, test.labels, 0, half);
            const Vector y_soft = data::soft_binary_targets(model::forward_batch(*teacher, train.inputs).col(0), p.tau)
                                      .flatten();
            const double c_soft = kernel::supervision_complexity(k.base, y_soft);
            const auto sol_soft = kernel::ridge_solve(k.base, y_soft, kernel::KernelRidgeConfig{lambda, 1});
            const double student_risk =
                sign_error(kernel::evaluate(sol_soft, k_cross), test.labels, half, test.labels.size());
            const auto rd = best_over_gammas(gammas, p.delta, [&](const bounds::MarginParams& mp) {
                return bounds::distillation_bound(teacher_risk, sol_soft.train_predictions, y_soft, c_soft, trace,
                                                  kappa, n, mp);
            });
            const bool dholds = rd.total >= student_risk;
            distill_holds += dholds ? 1 : 0;
            table.add_row({static_cast<std::int64_t>(trial), std::string("distillation"), rd.gamma,
                           rd.empirical_margin_term, rd.complexity_term, rd.confidence_term, teacher_risk, rd.total,
                           static_cast<std::int64_t>(rd.m0), kappa, c_soft, student_risk,
                           static_cast<std::int64_t>(dholds)});
        }
    }
    rep.tables.emplace_back("bound_check", std::move(table));
    rep.summary.emplace_back("trials", static_cast<double>(p.trials));
    rep.summary.emplace_back("label_bound_holds", static_cast<double>(label_holds));
    if (teacher) rep.summary.emplace_back("distillation_bound_holds", static_cast<double>(distill_holds));
    rep.summary.emplace_back("mean_label_bound", mean(label_totals));
    rep.summary.emplace_back("mean_test_error", mean(label_errors));
}

void checkpoint_frequency(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    const LossKind kd = kd_kind(cfg);
    std::vector<int> periods = cfg.params.periods;
    std::sort(periods.begin(), periods.end());
    periods.erase(std::unique(periods.begin(), periods.end()), periods.end());

    std::vector<distill::RunArtifact> teachers;
    for (std::uint64_t s : cfg.params.seeds) teachers.push_back(fit_teacher(cfg, task, s));

    CsvTable table({"period", "seed", "test_acc", "teacher_updates"});
    for (int period : periods) {
        std::vector<double> accs;
        for (std::size_t k = 0; k < teachers.size(); ++k) {
            const std::uint64_t s = cfg.params.seeds[k];
            const auto run = fit_student(cfg, task, teachers[k], Mode::online, kd, period, s);
            const auto thinned =
                distill::thin_trajectory(distill::make_trajectory(teachers[k].epoch_checkpoints), period);
            accs.push_back(final_test_acc(run));
            table.add_row({static_cast<std::int64_t>(period), as_int(s), accs.back(),
                           static_cast<std::int64_t>(thinned.size())});
        }
        rep.summary.emplace_back("mean_test_acc_period_" + std::to_string(period), mean(accs));
    }
    rep.tables.emplace_back("checkpoint_frequency", std::move(table));
}

void alpha_sweep(const ExperimentConfig& cfg, RunReport& rep) {
    const Task task = make_task(cfg);
    std::vector<distill::RunArtifact> teachers;
    for (std::uint64_t s : cfg.params.seeds) teachers.push_back(fit_teacher(cfg, task, s));

    CsvTable table({"alpha", "seed", "offline", "online"});
    for (double alpha : cfg.params.alphas) {
        const LossKind kind{LossTag::mixture, cfg.params.tau, alpha};
        std::vector<double> off, on;
        for (std::size_t k = 0; k < teachers.size(); ++k) {
            const std::uint64_t s = cfg.params.seeds[k];
            off.push_back(final_test_acc(fit_student(cfg, task, teachers[k], Mode::offline, kind, 1, s)));
            on.push_back(final_test_acc(fit_student(cfg, task, teachers[k], Mode::online, kind, 1, s)));
            table.add_row({alpha, as_int(s), off.back(), on.back()});
        }
        char key[64];
        std::snprintf(key, sizeof(key), "%g", alpha);
        rep.summary.emplace_back(std::string("mean_offline_alpha_") + key, mean(off));
        rep.summary.emplace_back(std::string("mean_online_alpha_") + key, mean(on));
    }
    rep.tables.emplace(rep.tables.begin(), "alpha_sweep", std::move(table));
}

void finish(const ExperimentConfig& cfg, const RunReport& rep, const RunOptions& opts) {
    if (!opts.write_files) return;
    write_report(rep, opts.out_dir);
    write_text_atomic(serialize_config(cfg), opts.out_dir / "config.toml");
}

RunReport start(const ExperimentConfig& cfg, std::string_view recipe) {
    RunReport rep;
    rep.recipe = std::string(recipe);
    rep.config_digest = config_digest(cfg);
    return rep;
}

}  // namespace

Task make_task(const ExperimentConfig& cfg) {
    auto [train, test] = data::make_split(dataset_spec(cfg), cfg.dataset.n_test);
    return Task{std::move(train), std::move(test)};
}

distill::RunArtifact fit_teacher(const ExperimentConfig& cfg, const Task& task, std::uint64_t run) {
    const model::MlpSpec spec = net_spec(cfg.teacher, derive_seed(cfg.seed, "teacher_init", run));
    const distill::TrainConfig tc =
        train_config(teacher_section(cfg), task.train.size(), derive_seed(cfg.seed, "teacher_sgd", run));
    return distill::train(model::init(spec), task.train, LossKind{cfg.params.teacher_loss}, nullptr, tc, &task.test);
}

CsvTable metrics_table(const std::vector<distill::MetricRow>& rows) {
    CsvTable t({"epoch", "step", "loss", "train_acc", "test_acc", "teacher_time"});
    for (const auto& r : rows)
        t.add_row({static_cast<std::int64_t>(r.epoch), r.step, r.loss, r.train_acc, r.test_acc, r.teacher_time});
    return t;
}

RunReport run_recipe(const ExperimentConfig& cfg, const RunOptions& opts) {
    const std::string_view name = to_string(cfg.recipe);
    try {
        cfg.validate();
        RunReport rep = start(cfg, name);
        switch (cfg.recipe) {
            case Recipe::complexity_curve: complexity_curve(cfg, rep); break;
            case Recipe::online_vs_offline: online_vs_offline(cfg, rep); break;
            case Recipe::temperature_sweep: temperature_sweep(cfg, rep); break;
            case Recipe::ntk_similarity: ntk_similarity(cfg, rep); break;
            case Recipe::bound_check: bound_check(cfg, rep); break;
            case Recipe::checkpoint_frequency: checkpoint_frequency(cfg, rep); break;
            case Recipe::alpha_sweep: alpha_sweep(cfg, rep); break;
        }
        finish(cfg, rep, opts);
        return rep;
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw RecipeError(std::string(name) + ": " + e.what());
    }
}

RunReport run_train_teacher(const ExperimentConfig& cfg, const RunOptions& opts) {
    try {
        cfg.validate();
        RunReport rep = start(cfg, "train_teacher");
        const Task task = make_task(cfg);
        const distill::RunArtifact teacher = fit_teacher(cfg, task, 0);
        if (opts.write_files) {
            const auto dir = opts.out_dir / "teacher";
            std::filesystem::create_directories(dir);
            for (const auto& c : teacher.epoch_checkpoints) {
                char name[32];
                std::snprintf(name, sizeof(name), "epoch_%04lld.kdcl", static_cast<long long>(c.epoch_index));
                model::save(c, dir / name);
            }
        }
        rep.tables.emplace_back("teacher_metrics", metrics_table(teacher.metrics));
        rep.summary.emplace_back("teacher_test_acc", final_test_acc(teacher));
        finish(cfg, rep, opts);
        return rep;
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw RecipeError(std::string("train_teacher: ") + e.what());
    }
}

}  // namespace kdlab::harness

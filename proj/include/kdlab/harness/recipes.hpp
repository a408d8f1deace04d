#pragma once

#include "kdlab/data.hpp"
#include "kdlab/distill.hpp"
#include "kdlab/harness/config.hpp"
#include "kdlab/harness/report.hpp"

#include <filesystem>

namespace kdlab::harness {

struct RunOptions {
    std::filesystem::path out_dir;
    bool write_files = true;
};

/// Train and test splits of the configured synthetic task.
struct Task {
    data::LabeledDataset train;
    data::LabeledDataset test;
};

Task make_task(const ExperimentConfig& cfg);

/// Trains the configured teacher on hard labels; `run` selects the seed stream.
distill::RunArtifact fit_teacher(const ExperimentConfig& cfg, const Task& task, std::uint64_t run);

CsvTable metrics_table(const std::vector<distill::MetricRow>& rows);

/// Executes cfg.recipe. Failures are rethrown as RecipeError naming the recipe.
RunReport run_recipe(const ExperimentConfig& cfg, const RunOptions& opts);

/// Trains the teacher and saves one checkpoint per epoch under <out_dir>/teacher.
RunReport run_train_teacher(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace kdlab::harness

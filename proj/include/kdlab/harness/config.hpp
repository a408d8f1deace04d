#pragma once

#include "kdlab/data.hpp"
#include "kdlab/distill.hpp"
#include "kdlab/loss.hpp"
#include "kdlab/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kdlab::harness {

enum class Recipe {
    complexity_curve,
    online_vs_offline,
    temperature_sweep,
    ntk_similarity,
    bound_check,
    checkpoint_frequency,
    alpha_sweep,
};

std::string_view to_string(Recipe r);
Recipe recipe_from_string(std::string_view s);

struct DatasetConfig {
    data::Family family = data::Family::two_rings;
    int n = 512;
    int n_test = 512;
    int classes = 2;
    int dim = 2;
    double noise = 0.1;

    bool operator==(const DatasetConfig&) const = default;
};

struct NetConfig {
    std::vector<int> widths;
    model::Activation activation = model::Activation::relu;
    model::Init init = model::Init::he_normal;

    bool operator==(const NetConfig&) const = default;
};

/// Training hyperparameters as written in a config; seeds are derived.
struct TrainSection {
    int epochs = 20;
    int batch_size = 0;  // 0 selects min(128, n/4)
    double lr = 0.05;
    double momentum = 0.9;
    bool nesterov = true;
    int warmup_epochs = 0;
    std::vector<std::pair<int, double>> schedule;

    bool operator==(const TrainSection&) const = default;
};

/// Recipe knobs; every field has a default so each recipe is complete.
struct RecipeParams {
    LossTag teacher_loss = LossTag::ce;
    LossTag student_loss = LossTag::ce;
    LossTag kd_loss = LossTag::kd_ce;
    double tau = 4.0;
    std::vector<double> taus{1.0, 2.0, 4.0, 8.0};
    std::vector<int> periods{1, 2, 4, 8, 16};
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int eval_size = 128;
    std::vector<int> eval_epochs;  // empty: every epoch from 0
    int average_window = 0;        // 0 disables the averaged-teacher curve
    int num_probes = 64;
    int probe_batch = 64;
    int trials = 200;
    double delta = 0.05;
    std::vector<double> gammas;  // empty: 2^-6 .. 2^3
    bool distill_bound = true;

    bool operator==(const RecipeParams&) const = default;
};

struct ExperimentConfig {
    Recipe recipe = Recipe::complexity_curve;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    DatasetConfig dataset;
    NetConfig teacher;
    NetConfig student;
    TrainSection train;
    std::optional<TrainSection> teacher_train;
    RecipeParams params;

    /// Throws ValidationError naming the first inconsistent key.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ParseError (with line/column) on malformed TOML and
/// ValidationError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical TOML; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Hex SHA-256 of the canonical serialization with out_dir reset to its
/// default, so the digest does not depend on where results are written.
std::string config_digest(const ExperimentConfig& cfg);

/// Deterministic child seed for a named stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

std::vector<double> effective_gammas(const RecipeParams& p);

data::SyntheticSpec dataset_spec(const ExperimentConfig& cfg);
model::MlpSpec net_spec(const NetConfig& net, std::uint64_t seed);
distill::TrainConfig train_config(const TrainSection& t, int n, std::uint64_t seed);

}  // namespace kdlab::harness

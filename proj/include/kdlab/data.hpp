#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kdlab::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Family { gaussian_blobs, two_rings, xor_grid };
enum class SplitTag { train, test };
enum class TargetKind { one_hot, signed_binary, soft, random };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);

struct SyntheticSpec {
    Family family = Family::gaussian_blobs;
    int n = 100;
    int d = 2;
    int p = 2;
    double noise = 0.1;
    std::uint64_t seed = 0;
    /// Selects the sample streams; the class geometry depends on seed only,
    /// so different sample seeds resample the same distribution.
    std::uint64_t sample_seed = 0;
    SplitTag split = SplitTag::train;
};

/// Inputs (n×p) with integer class labels in [0, num_classes).
struct LabeledDataset {
    Matrix inputs;
    std::vector<int> labels;
    int num_classes = 2;
    SplitTag split = SplitTag::train;
    std::uint64_t seed = 0;

    int size() const noexcept { return static_cast<int>(labels.size()); }
    int input_dim() const noexcept { return static_cast<int>(inputs.cols()); }
};

/// Targets as an n×d matrix; binary signed/soft targets use d = 1.
struct TargetMatrix {
    Matrix values;
    TargetKind kind = TargetKind::one_hot;

    /// Example-major flattening: index i·d + y.
    Vector flatten() const;
};

/// Generates a class-balanced synthetic task with standardized inputs.
/// Every family uses the first two coordinates for the class geometry;
/// remaining coordinates are nuisance noise.
LabeledDataset make_synthetic(const SyntheticSpec& spec);

/// Generates a train/test pair drawn from one distribution. The class
/// geometry is shared; samples use independent streams, and the test split is
/// standardized with the train split's statistics.
std::pair<LabeledDataset, LabeledDataset> make_split(const SyntheticSpec& spec, int n_test);

LabeledDataset binarize_labels(const LabeledDataset& ds, int boundary);

TargetMatrix encode_targets(const LabeledDataset& ds, TargetKind kind);

/// i.i.d. uniform targets, independent of any inputs.
TargetMatrix random_targets(int n, int d, TargetKind kind, std::uint64_t seed);

/// 2·sigmoid(logit/τ) − 1, elementwise; n×1 result.
TargetMatrix soft_binary_targets(const Vector& logits, double tau);

/// Row-wise softmax(logits/τ).
TargetMatrix soft_multiclass_targets(const Matrix& logits, double tau);

/// Soft targets for a model head: signed binary for a single output,
/// softmax otherwise.
TargetMatrix soft_targets(const Matrix& logits, double tau);

/// Hard targets for a model head of the given width: signed ±1 for a single
/// output, one-hot otherwise.
TargetMatrix hard_targets(const LabeledDataset& ds, int output_dim);

/// Row subset (in the given order).
LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& rows);

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset read_csv(const std::filesystem::path& path, int num_classes);

}  // namespace kdlab::data

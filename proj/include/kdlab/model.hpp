#pragma once

#include "kdlab/loss.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace kdlab::model {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Flat parameter vector. Layout is layer-major; within a layer the weight
/// matrix (out×in, row-major) precedes the bias.
using ParamVector = Eigen::VectorXd;

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };
enum class Init { he_normal, small_uniform };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);
std::string_view to_string(Init i);
Init init_from_string(std::string_view s);

struct MlpSpec {
    std::vector<int> layer_widths;  // input width first, output width last
    Activation activation = Activation::relu;
    Init init = Init::he_normal;
    std::uint64_t seed = 0;

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
    Eigen::Index num_params() const;
    void validate() const;

    bool operator==(const MlpSpec&) const = default;
};

struct Checkpoint {
    MlpSpec spec;
    ParamVector params;
    std::int64_t step_index = 0;
    std::int64_t epoch_index = 0;
};

/// Fresh checkpoint: he_normal draws weights from N(0, 2/fan_in),
/// small_uniform from U(−1/√fan_in, 1/√fan_in). Biases start at zero.
Checkpoint init(const MlpSpec& spec);

Vector forward(const Checkpoint& c, const Vector& x);

/// Logits for every row of xs (n×p) as an n×d matrix.
Matrix forward_batch(const Checkpoint& c, const Matrix& xs);

/// ∂f(x)/∂θ as a d×P matrix, rows by output, columns by parameter layout.
/// ReLU uses derivative 0 at a preactivation of exactly 0.
Matrix jacobian(const Checkpoint& c, const Vector& x);

/// J(x)ᵀ·cotangent (reverse mode).
ParamVector vjp(const Checkpoint& c, const Vector& x, const Vector& cotangent);

/// J(x)·tangent (forward mode).
Vector jvp(const Checkpoint& c, const Vector& x, const ParamVector& tangent);

/// Gradient of the batch-mean loss over the rows of inputs.
ParamVector loss_grad(const Checkpoint& c, const Matrix& inputs, const LossKind& kind, const LossTargets& targets);

struct LossAndGrad {
    double loss = 0.0;
    ParamVector grad;
    Matrix logits;
};

LossAndGrad loss_and_grad(const Checkpoint& c, const Matrix& inputs, const LossKind& kind,
                          const LossTargets& targets);

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Binary checkpoint: "KDCL", u16 version, u32 width count, u32 widths,
/// u8 activation, u64 seed, u64 P, P float64 values; all little-endian.
/// The init kind and step/epoch indices are not part of the format.
void save(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

}  // namespace kdlab::model

#include "kdlab/model.hpp"

#include "kdlab/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace kdlab::model {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw InvalidSpec("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(Init i) { return i == Init::he_normal ? "he_normal" : "small_uniform"; }

Init init_from_string(std::string_view s) {
    if (s == "he_normal") return Init::he_normal;
    if (s == "small_uniform") return Init::small_uniform;
    throw InvalidSpec("unknown init '" + std::string(s) + "'");
}

Eigen::Index MlpSpec::num_params() const {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
        total += static_cast<Eigen::Index>(layer_widths[l] + 1) * layer_widths[l + 1];
    return total;
}

void MlpSpec::validate() const {
    if (layer_widths.size() < 2) throw InvalidSpec("MLP needs at least an input and an output width");
    for (int w : layer_widths)
        if (w < 1) throw InvalidSpec("MLP layer widths must be positive");
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using MutWeights = Eigen::Map<RowMajor>;

struct LayerSlot {
    int in;
    int out;
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
};

std::vector<LayerSlot> layout(const MlpSpec& spec) {
    std::vector<LayerSlot> slots;
    Eigen::Index offset = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int in = spec.layer_widths[l];
        const int out = spec.layer_widths[l + 1];
        slots.push_back({in, out, offset, offset + static_cast<Eigen::Index>(in) * out});
        offset += static_cast<Eigen::Index>(in + 1) * out;
    }
    return slots;
}

void check_checkpoint(const Checkpoint& c) {
    c.spec.validate();
    detail::require_dims(c.params.size() == c.spec.num_params(),
                         "checkpoint has " + std::to_string(c.params.size()) + " params, spec needs " +
                             std::to_string(c.spec.num_params()));
}

double activate(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

// Derivative given the preactivation z and the activation value h.
double activate_grad(Activation a, double z, double h) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

// Per-layer preactivations and activations for a batch (rows are examples).
struct BatchTrace {
    std::vector<Matrix> pre;   // pre[l]: n×out_l
    std::vector<Matrix> post;  // post[0] = inputs, post[l+1] = act(pre[l]) for hidden layers
};

BatchTrace run_forward(const Checkpoint& c, const Matrix& xs) {
    check_checkpoint(c);
    detail::require_dims(xs.cols() == c.spec.input_dim(),
                         "input width " + std::to_string(xs.cols()) + " does not match model input " +
                             std::to_string(c.spec.input_dim()));
    const auto slots = layout(c.spec);
    BatchTrace t;
    t.post.push_back(xs);
    for (std::size_t l = 0; l < slots.size(); ++l) {
        const auto& s = slots[l];
        ConstWeights w(c.params.data() + s.weight_offset, s.out, s.in);
        Eigen::Map<const Vector> b(c.params.data() + s.bias_offset, s.out);
        Matrix z = t.post.back() * w.transpose();
        z.rowwise() += b.transpose();
        if (l + 1 < slots.size()) {
            Matrix h = z.unaryExpr([&](double v) { return activate(c.spec.activation, v); });
            t.pre.push_back(std::move(z));
            t.post.push_back(std::move(h));
        } else {
            t.pre.push_back(std::move(z));
        }
    }
    return t;
}

// Given ∂L/∂logits for every example (n×d), accumulates Σᵢ Jᵢᵀ·gᵢ.
ParamVector backprop(const Checkpoint& c, const BatchTrace& t, Matrix delta) {
    const auto slots = layout(c.spec);
    ParamVector grad = ParamVector::Zero(c.spec.num_params());
    for (int l = static_cast<int>(slots.size()) - 1; l >= 0; --l) {
        const auto& s = slots[l];
        MutWeights gw(grad.data() + s.weight_offset, s.out, s.in);
        gw.noalias() = delta.transpose() * t.post[l];
        grad.segment(s.bias_offset, s.out) = delta.colwise().sum().transpose();
        if (l == 0) break;
        ConstWeights w(c.params.data() + s.weight_offset, s.out, s.in);
        Matrix back = delta * w;
        const Matrix& z = t.pre[l - 1];
        const Matrix& h = t.post[l];
        for (Eigen::Index i = 0; i < back.rows(); ++i)
            for (Eigen::Index j = 0; j < back.cols(); ++j)
                back(i, j) *= activate_grad(c.spec.activation, z(i, j), h(i, j));
        delta = std::move(back);
    }
    return grad;
}

}  // namespace

Checkpoint init(const MlpSpec& spec) {
    spec.validate();
    Checkpoint c;
    c.spec = spec;
    c.params = ParamVector::Zero(spec.num_params());
    std::mt19937_64 rng(spec.seed);
    for (const auto& s : layout(spec)) {
        const double fan_in = static_cast<double>(s.in);
        const Eigen::Index count = static_cast<Eigen::Index>(s.in) * s.out;
        if (spec.init == Init::he_normal) {
            std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
            for (Eigen::Index k = 0; k < count; ++k) c.params(s.weight_offset + k) = normal(rng);
        } else {
            const double bound = 1.0 / std::sqrt(fan_in);
            std::uniform_real_distribution<double> uniform(-bound, bound);
            for (Eigen::Index k = 0; k < count; ++k) c.params(s.weight_offset + k) = uniform(rng);
        }
    }
    return c;
}

Matrix forward_batch(const Checkpoint& c, const Matrix& xs) { return run_forward(c, xs).pre.back(); }

Vector forward(const Checkpoint& c, const Vector& x) {
    return forward_batch(c, x.transpose()).row(0).transpose();
}

Matrix jacobian(const Checkpoint& c, const Vector& x) {
    const BatchTrace t = run_forward(c, x.transpose());
    const auto slots = layout(c.spec);
    const int d = c.spec.output_dim();
    Matrix jac = Matrix::Zero(d, c.spec.num_params());

    // delta(k, j): ∂f_k / ∂(preactivation j of the current layer).
    Matrix delta = Matrix::Identity(d, d);
    for (int l = static_cast<int>(slots.size()) - 1; l >= 0; --l) {
        const auto& s = slots[l];
        const Eigen::RowVectorXd a = t.post[l].row(0);
        for (int k = 0; k < d; ++k) {
            for (int o = 0; o < s.out; ++o)
                jac.row(k).segment(s.weight_offset + static_cast<Eigen::Index>(o) * s.in, s.in) = delta(k, o) * a;
            jac.row(k).segment(s.bias_offset, s.out) = delta.row(k);
        }
        if (l == 0) break;
        ConstWeights w(c.params.data() + s.weight_offset, s.out, s.in);
        Matrix back = delta * w;
        for (Eigen::Index j = 0; j < back.cols(); ++j)
            back.col(j) *= activate_grad(c.spec.activation, t.pre[l - 1](0, j), t.post[l](0, j));
        delta = std::move(back);
    }
    return jac;
}

ParamVector vjp(const Checkpoint& c, const Vector& x, const Vector& cotangent) {
    detail::require_dims(cotangent.size() == c.spec.output_dim(), "vjp: cotangent length does not match outputs");
    const BatchTrace t = run_forward(c, x.transpose());
    return backprop(c, t, cotangent.transpose());
}

Vector jvp(const Checkpoint& c, const Vector& x, const ParamVector& tangent) {
    detail::require_dims(tangent.size() == c.spec.num_params(), "jvp: tangent length does not match params");
    const BatchTrace t = run_forward(c, x.transpose());
    const auto slots = layout(c.spec);
    Vector da = Vector::Zero(x.size());  // tangent of the layer input
    Vector dz;
    for (std::size_t l = 0; l < slots.size(); ++l) {
        const auto& s = slots[l];
        ConstWeights w(c.params.data() + s.weight_offset, s.out, s.in);
        ConstWeights dw(tangent.data() + s.weight_offset, s.out, s.in);
        const Vector a = t.post[l].row(0).transpose();
        dz = dw * a + w * da + tangent.segment(s.bias_offset, s.out);
        if (l + 1 < slots.size()) {
            da.resize(s.out);
            for (int j = 0; j < s.out; ++j)
                da(j) = activate_grad(c.spec.activation, t.pre[l](0, j), t.post[l + 1](0, j)) * dz(j);
        }
    }
    return dz;
}

LossAndGrad loss_and_grad(const Checkpoint& c, const Matrix& inputs, const LossKind& kind,
                          const LossTargets& targets) {
    if (inputs.rows() < 1) throw DimensionMismatch("loss_grad: empty batch");
    const BatchTrace t = run_forward(c, inputs);
    LossAndGrad out;
    out.logits = t.pre.back();
    out.loss = compute_loss(kind, out.logits, targets);
    out.grad = backprop(c, t, loss_logit_gradient(kind, out.logits, targets));
    return out;
}

ParamVector loss_grad(const Checkpoint& c, const Matrix& inputs, const LossKind& kind, const LossTargets& targets) {
    return loss_and_grad(c, inputs, kind, targets).grad;
}

// ---- persistence ----

namespace {

constexpr char kMagic[4] = {'K', 'D', 'C', 'L'};

template <typename T>
void put(std::string& buf, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        buf.append(bytes.data(), bytes.size());
    } else {
        char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        buf.append(bytes, sizeof(T));
    }
}

class Reader {
public:
    Reader(const std::string& buf, const std::string& source) : buf_(buf), source_(source) {}

    template <typename T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > buf_.size())
            throw FormatError("checkpoint '" + source_ + "' truncated while reading " + what);
        char bytes[sizeof(T)];
        std::memcpy(bytes, buf_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(bytes, bytes + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }

    bool at_end() const { return pos_ == buf_.size(); }

private:
    const std::string& buf_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace

void save(const Checkpoint& c, const std::filesystem::path& path) {
    check_checkpoint(c);
    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint16_t>(buf, kCheckpointVersion);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(c.spec.layer_widths.size()));
    for (int w : c.spec.layer_widths) put<std::uint32_t>(buf, static_cast<std::uint32_t>(w));
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(c.spec.activation));
    put<std::uint64_t>(buf, c.spec.seed);
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(c.params.size()));
    for (Eigen::Index k = 0; k < c.params.size(); ++k) put<double>(buf, c.params(k));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(buf, path.string());

    for (char expected : kMagic)
        if (r.get<char>("magic") != expected) throw FormatError("'" + path.string() + "' is not a KDCL checkpoint");
    const auto version = r.get<std::uint16_t>("version");
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version: expected " + std::to_string(kCheckpointVersion) +
                          ", found " + std::to_string(version));

    Checkpoint c;
    const auto count = r.get<std::uint32_t>("width count");
    if (count < 2 || count > 4096) throw FormatError("implausible layer count " + std::to_string(count));
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto w = r.get<std::uint32_t>("layer width");
        if (w == 0 || w > (1u << 24)) throw FormatError("implausible layer width " + std::to_string(w));
        c.spec.layer_widths.push_back(static_cast<int>(w));
    }
    const auto act = r.get<std::uint8_t>("activation");
    if (act > 1) throw FormatError("unknown activation code " + std::to_string(act));
    c.spec.activation = static_cast<Activation>(act);
    c.spec.seed = r.get<std::uint64_t>("seed");
    const auto p = r.get<std::uint64_t>("parameter count");
    if (p != static_cast<std::uint64_t>(c.spec.num_params()))
        throw FormatError("parameter count " + std::to_string(p) + " does not match layer widths (" +
                          std::to_string(c.spec.num_params()) + ")");
    c.params.resize(static_cast<Eigen::Index>(p));
    for (Eigen::Index k = 0; k < c.params.size(); ++k) c.params(k) = r.get<double>("parameters");
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload in '" + path.string() + "'");
    return c;
}

}  // namespace kdlab::model

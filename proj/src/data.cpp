#include "kdlab/data.hpp"

#include "kdlab/error.hpp"
#include "kdlab/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace kdlab::data {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::gaussian_blobs: return "gaussian_blobs";
        case Family::two_rings: return "two_rings";
        case Family::xor_grid: return "xor_grid";
    }
    return "unknown";
}

Family family_from_string(std::string_view s) {
    if (s == "gaussian_blobs") return Family::gaussian_blobs;
    if (s == "two_rings") return Family::two_rings;
    if (s == "xor_grid") return Family::xor_grid;
    throw InvalidSpec("unknown dataset family '" + std::string(s) + "'");
}

Vector TargetMatrix::flatten() const {
    Vector out(values.size());
    const auto d = values.cols();
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index y = 0; y < d; ++y) out(i * d + y) = values(i, y);
    return out;
}

namespace {

constexpr double kRingRadius[2] = {1.0, 2.0};
constexpr double kBlobSpread = 2.0;

void validate(const SyntheticSpec& spec) {
    if (spec.n < 1) throw InvalidSpec("make_synthetic: n must be >= 1");
    if (spec.p < 2) throw InvalidSpec("make_synthetic: p must be >= 2");
    if (spec.d < 2) throw InvalidSpec("make_synthetic: d must be >= 2");
    if (spec.n < spec.d) throw InvalidSpec("make_synthetic: n must be >= d");
    if (spec.noise < 0.0) throw InvalidSpec("make_synthetic: noise must be >= 0");
    if (spec.family == Family::two_rings && spec.d != 2) throw InvalidSpec("two_rings requires d = 2");
}

// Class geometry shared by every split generated from one seed.
struct Geometry {
    Matrix blob_means;  // d×p
    int grid_cells = 2;
};

Geometry make_geometry(const SyntheticSpec& spec, std::mt19937_64& rng) {
    Geometry g;
    std::normal_distribution<double> normal;
    if (spec.family == Family::gaussian_blobs) {
        g.blob_means.resize(spec.d, spec.p);
        for (int c = 0; c < spec.d; ++c)
            for (int j = 0; j < spec.p; ++j) g.blob_means(c, j) = kBlobSpread * normal(rng);
    }
    g.grid_cells = std::max(2, spec.d);
    return g;
}

// Balanced labels: i mod d, shuffled.
std::vector<int> balanced_labels(int n, int d, std::mt19937_64& rng) {
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % d;
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

LabeledDataset sample(const SyntheticSpec& spec, const Geometry& g, int count, SplitTag split,
                      std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    LabeledDataset ds;
    ds.num_classes = spec.d;
    ds.split = split;
    ds.seed = spec.seed;
    ds.labels = balanced_labels(count, spec.d, rng);
    ds.inputs = Matrix::Zero(count, spec.p);

    for (int i = 0; i < count; ++i) {
        const int c = ds.labels[i];
        auto row = ds.inputs.row(i);
        switch (spec.family) {
            case Family::gaussian_blobs:
                for (int j = 0; j < spec.p; ++j) row(j) = g.blob_means(c, j) + spec.noise * normal(rng);
                break;
            case Family::two_rings: {
                const double angle = 2.0 * std::numbers::pi * unit(rng);
                const double radius = kRingRadius[c] + spec.noise * normal(rng);
                row(0) = radius * std::cos(angle);
                row(1) = radius * std::sin(angle);
                for (int j = 2; j < spec.p; ++j) row(j) = normal(rng);
                break;
            }
            case Family::xor_grid: {
                // Cells (ix, iy) with (ix + iy) mod d == c, uniform within the cell.
                const int k = g.grid_cells;
                std::vector<std::pair<int, int>> cells;
                for (int ix = 0; ix < k; ++ix)
                    for (int iy = 0; iy < k; ++iy)
                        if ((ix + iy) % spec.d == c) cells.emplace_back(ix, iy);
                std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
                const auto [ix, iy] = cells[pick(rng)];
                const double width = 2.0 / k;
                row(0) = -1.0 + width * (ix + unit(rng)) + spec.noise * normal(rng);
                row(1) = -1.0 + width * (iy + unit(rng)) + spec.noise * normal(rng);
                for (int j = 2; j < spec.p; ++j) row(j) = normal(rng);
                break;
            }
        }
    }
    return ds;
}

struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        s.mean = x.colwise().mean().transpose();
        s.scale = Vector::Ones(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - s.mean(j)).square().mean();
            if (var > 1e-24) s.scale(j) = std::sqrt(var);
        }
        return s;
    }

    void apply(Matrix& x) const {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    }
};

}  // namespace

std::pair<LabeledDataset, LabeledDataset> make_split(const SyntheticSpec& spec, int n_test) {
    validate(spec);
    if (n_test < 0) throw InvalidSpec("make_split: n_test must be >= 0");
    std::mt19937_64 geometry_rng(spec.seed);
    const Geometry g = make_geometry(spec, geometry_rng);
    const std::uint64_t stream = spec.seed ^ (spec.sample_seed * 0xbf58476d1ce4e5b9ULL);
    std::mt19937_64 train_rng(stream ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 test_rng(stream ^ 0xc2b2ae3d27d4eb4fULL);

    LabeledDataset train = sample(spec, g, spec.n, SplitTag::train, train_rng);
    LabeledDataset test = sample(spec, g, n_test, SplitTag::test, test_rng);
    const Standardizer s = Standardizer::fit(train.inputs);
    s.apply(train.inputs);
    if (n_test > 0) s.apply(test.inputs);
    return {std::move(train), std::move(test)};
}

LabeledDataset make_synthetic(const SyntheticSpec& spec) {
    auto [train, test] = make_split(spec, 0);
    train.split = spec.split;
    return train;
}

LabeledDataset binarize_labels(const LabeledDataset& ds, int boundary) {
    if (boundary <= 0 || boundary >= ds.num_classes)
        throw InvalidSpec("binarize_labels: boundary " + std::to_string(boundary) + " outside (0, " +
                          std::to_string(ds.num_classes) + ")");
    LabeledDataset out = ds;
    out.num_classes = 2;
    for (int& y : out.labels) y = y < boundary ? 0 : 1;
    return out;
}

TargetMatrix encode_targets(const LabeledDataset& ds, TargetKind kind) {
    const int n = ds.size();
    TargetMatrix t;
    t.kind = kind;
    switch (kind) {
        case TargetKind::one_hot:
            t.values = Matrix::Zero(n, ds.num_classes);
            for (int i = 0; i < n; ++i) {
                if (ds.labels[i] < 0 || ds.labels[i] >= ds.num_classes)
                    throw InvalidSpec("encode_targets: label out of range");
                t.values(i, ds.labels[i]) = 1.0;
            }
            return t;
        case TargetKind::signed_binary:
            if (ds.num_classes != 2) throw InvalidSpec("signed_binary targets require exactly 2 classes");
            t.values.resize(n, 1);
            for (int i = 0; i < n; ++i) t.values(i, 0) = ds.labels[i] == 1 ? 1.0 : -1.0;
            return t;
        default:
            throw InvalidSpec("encode_targets supports one_hot and signed_binary only");
    }
}

TargetMatrix random_targets(int n, int d, TargetKind kind, std::uint64_t seed) {
    if (n < 1) throw InvalidSpec("random_targets: n must be >= 1");
    std::mt19937_64 rng(seed);
    TargetMatrix t;
    t.kind = TargetKind::random;
    if (kind == TargetKind::signed_binary) {
        std::bernoulli_distribution coin(0.5);
        t.values.resize(n, 1);
        for (int i = 0; i < n; ++i) t.values(i, 0) = coin(rng) ? 1.0 : -1.0;
    } else if (kind == TargetKind::one_hot) {
        if (d < 2) throw InvalidSpec("random one_hot targets need d >= 2");
        std::uniform_int_distribution<int> cls(0, d - 1);
        t.values = Matrix::Zero(n, d);
        for (int i = 0; i < n; ++i) t.values(i, cls(rng)) = 1.0;
    } else {
        throw InvalidSpec("random_targets supports one_hot and signed_binary only");
    }
    return t;
}

TargetMatrix soft_binary_targets(const Vector& logits, double tau) {
    if (!(tau > 0.0)) throw InvalidSpec("soft_binary_targets: tau must be > 0");
    TargetMatrix t;
    t.kind = TargetKind::soft;
    t.values.resize(logits.size(), 1);
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        // 2σ(z) − 1 = tanh(z/2), which keeps full precision near saturation.
        t.values(i, 0) = std::tanh(0.5 * logits(i) / tau);
    }
    return t;
}

TargetMatrix soft_multiclass_targets(const Matrix& logits, double tau) {
    if (!(tau > 0.0)) throw InvalidSpec("soft_multiclass_targets: tau must be > 0");
    TargetMatrix t;
    t.kind = TargetKind::soft;
    t.values.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Eigen::RowVectorXd z = logits.row(i) / tau;
        const Eigen::RowVectorXd e = (z.array() - z.maxCoeff()).exp();
        t.values.row(i) = e / e.sum();
    }
    return t;
}

TargetMatrix soft_targets(const Matrix& logits, double tau) {
    if (logits.cols() == 1) return soft_binary_targets(logits.col(0), tau);
    return soft_multiclass_targets(logits, tau);
}

TargetMatrix hard_targets(const LabeledDataset& ds, int output_dim) {
    if (output_dim == 1) return encode_targets(ds, TargetKind::signed_binary);
    if (output_dim != ds.num_classes)
        throw DimensionMismatch("model output width " + std::to_string(output_dim) + " does not match " +
                                std::to_string(ds.num_classes) + " classes");
    return encode_targets(ds, TargetKind::one_hot);
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& rows) {
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.split = ds.split;
    out.seed = ds.seed;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), ds.inputs.cols());
    out.labels.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.inputs.row(static_cast<Eigen::Index>(k)) = ds.inputs.row(rows[k]);
        out.labels[k] = ds.labels[rows[k]];
    }
    return out;
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const auto p = ds.inputs.cols();
    for (Eigen::Index j = 0; j < p; ++j) out << 'x' << j << ',';
    out << "label\n";
    for (int i = 0; i < ds.size(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) out << format_double(ds.inputs(i, j)) << ',';
        out << ds.labels[i] << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

LabeledDataset read_csv(const std::filesystem::path& path, int num_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty dataset file '" + path.string() + "'");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header.back() != "label") throw FormatError("dataset header must end with 'label'");
    const std::size_t p = header.size() - 1;
    for (std::size_t j = 0; j < p; ++j)
        if (header[j] != "x" + std::to_string(j)) throw FormatError("unexpected column '" + header[j] + "'");

    std::vector<double> values;
    LabeledDataset ds;
    ds.num_classes = num_classes;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col < p) {
                values.push_back(parse_double(cell));
            } else if (col == p) {
                const int label = static_cast<int>(parse_double(cell));
                if (label < 0 || label >= num_classes) throw FormatError("label out of range: " + cell);
                ds.labels.push_back(label);
            }
            ++col;
        }
        if (col != p + 1) throw FormatError("row has " + std::to_string(col) + " columns, expected " +
                                            std::to_string(p + 1));
    }
    const auto n = static_cast<Eigen::Index>(ds.labels.size());
    ds.inputs.resize(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) ds.inputs(i, j) = values[i * p + j];
    return ds;
}

}  // namespace kdlab::data

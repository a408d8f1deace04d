#include "kdlab/harness/config.hpp"

#include "kdlab/error.hpp"
#include "kdlab/format.hpp"
#include "kdlab/ntk.hpp"

#include <openssl/evp.h>
#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kdlab::harness {

namespace {

constexpr std::pair<Recipe, std::string_view> kRecipeNames[] = {
    {Recipe::complexity_curve, "complexity_curve"},
    {Recipe::online_vs_offline, "online_vs_offline"},
    {Recipe::temperature_sweep, "temperature_sweep"},
    {Recipe::ntk_similarity, "ntk_similarity"},
    {Recipe::bound_check, "bound_check"},
    {Recipe::checkpoint_frequency, "checkpoint_frequency"},
    {Recipe::alpha_sweep, "alpha_sweep"},
};

// Reads typed values from one TOML table and reports keys it never consumed.
class TableReader {
public:
    TableReader(const toml::table& table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    std::string key_path(std::string_view key) const { return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key); }

    const toml::node* find(std::string_view key) {
        consumed_.insert(std::string(key));
        return table_.get(key);
    }

    bool has(std::string_view key) const { return table_.contains(key); }

    std::int64_t integer(std::string_view key, std::int64_t fallback) {
        const toml::node* node = find(key);
        if (node == nullptr) return fallback;
        return as_integer(*node, key_path(key));
    }

    double number(std::string_view key, double fallback) {
        const toml::node* node = find(key);
        if (node == nullptr) return fallback;
        return as_number(*node, key_path(key));
    }

    bool boolean(std::string_view key, bool fallback) {
        const toml::node* node = find(key);
        if (node == nullptr) return fallback;
        if (const auto* v = node->as_boolean()) return v->get();
        throw ValidationError(key_path(key), "expected a boolean");
    }

    std::string string(std::string_view key, std::string fallback) {
        const toml::node* node = find(key);
        if (node == nullptr) return fallback;
        if (const auto* v = node->as_string()) return v->get();
        throw ValidationError(key_path(key), "expected a string");
    }

    const toml::array* array(std::string_view key) {
        const toml::node* node = find(key);
        if (node == nullptr) return nullptr;
        if (const auto* arr = node->as_array()) return arr;
        throw ValidationError(key_path(key), "expected an array");
    }

    template <typename T, typename Convert>
    std::vector<T> list(std::string_view key, std::vector<T> fallback, Convert convert) {
        const toml::array* arr = array(key);
        if (arr == nullptr) return fallback;
        std::vector<T> out;
        for (const toml::node& node : *arr) out.push_back(convert(node, key_path(key)));
        return out;
    }

    const toml::table* subtable(std::string_view key) {
        const toml::node* node = find(key);
        if (node == nullptr) return nullptr;
        if (const auto* t = node->as_table()) return t;
        throw ValidationError(key_path(key), "expected a table");
    }

    void reject_unknown() const {
        for (const auto& [key, node] : table_)
            if (!consumed_.contains(std::string(key.str()))) throw ValidationError(key_path(key.str()), "unknown key");
    }

    static std::int64_t as_integer(const toml::node& node, const std::string& path) {
        if (const auto* v = node.as_integer()) return v->get();
        throw ValidationError(path, "expected an integer");
    }

    static double as_number(const toml::node& node, const std::string& path) {
        if (const auto* v = node.as_floating_point()) return v->get();
        if (const auto* v = node.as_integer()) return static_cast<double>(v->get());
        throw ValidationError(path, "expected a number");
    }

private:
    const toml::table& table_;
    std::string prefix_;
    std::set<std::string> consumed_;
};

int to_int(std::int64_t v, const std::string& path) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ValidationError(path, "integer out of range");
    return static_cast<int>(v);
}

template <typename Fn>
auto wrap_enum(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidSpec& e) {
        throw ValidationError(path, e.what());
    }
}

NetConfig read_net(TableReader& parent, std::string_view key) {
    const toml::table* t = parent.subtable(key);
    if (t == nullptr) throw ValidationError(std::string(key), "missing section");
    TableReader r(*t, std::string(key));
    NetConfig net;
    net.widths = r.list<int>("widths", {}, [](const toml::node& n, const std::string& p) {
        return to_int(TableReader::as_integer(n, p), p);
    });
    const std::string act = r.string("activation", "relu");
    net.activation = wrap_enum(r.key_path("activation"), [&] { return model::activation_from_string(act); });
    const std::string init = r.string("init", "he_normal");
    net.init = wrap_enum(r.key_path("init"), [&] { return model::init_from_string(init); });
    r.reject_unknown();
    return net;
}

TrainSection read_train(const toml::table& t, const std::string& prefix) {
    TableReader r(t, prefix);
    TrainSection s;
    s.epochs = to_int(r.integer("epochs", s.epochs), r.key_path("epochs"));
    s.batch_size = to_int(r.integer("batch_size", s.batch_size), r.key_path("batch_size"));
    s.lr = r.number("lr", s.lr);
    s.momentum = r.number("momentum", s.momentum);
    s.nesterov = r.boolean("nesterov", s.nesterov);
    s.warmup_epochs = to_int(r.integer("warmup_epochs", s.warmup_epochs), r.key_path("warmup_epochs"));
    if (const toml::array* sched = r.array("schedule")) {
        const std::string path = r.key_path("schedule");
        for (const toml::node& entry : *sched) {
            const auto* pair = entry.as_array();
            if (pair == nullptr || pair->size() != 2)
                throw ValidationError(path, "expected [epoch, divisor] pairs");
            s.schedule.emplace_back(to_int(TableReader::as_integer(*pair->get(0), path), path),
                                    TableReader::as_number(*pair->get(1), path));
        }
    }
    r.reject_unknown();
    return s;
}

LossTag read_loss(TableReader& r, std::string_view key, LossTag fallback) {
    const std::string s = r.string(key, std::string(to_string(fallback)));
    return wrap_enum(r.key_path(key), [&] { return loss_tag_from_string(s); });
}

RecipeParams read_params(const toml::table* t) {
    RecipeParams p;
    if (t == nullptr) return p;
    TableReader r(*t, "params");
    auto int_of = [](const toml::node& n, const std::string& path) { return to_int(TableReader::as_integer(n, path), path); };
    auto seed_of = [](const toml::node& n, const std::string& path) {
        const std::int64_t v = TableReader::as_integer(n, path);
        if (v < 0) throw ValidationError(path, "seeds must be >= 0");
        return static_cast<std::uint64_t>(v);
    };
    p.teacher_loss = read_loss(r, "teacher_loss", p.teacher_loss);
    p.student_loss = read_loss(r, "student_loss", p.student_loss);
    p.kd_loss = read_loss(r, "kd_loss", p.kd_loss);
    p.tau = r.number("tau", p.tau);
    p.taus = r.list<double>("taus", p.taus, TableReader::as_number);
    p.periods = r.list<int>("periods", p.periods, int_of);
    p.alphas = r.list<double>("alphas", p.alphas, TableReader::as_number);
    p.seeds = r.list<std::uint64_t>("seeds", p.seeds, seed_of);
    p.eval_size = to_int(r.integer("eval_size", p.eval_size), r.key_path("eval_size"));
    p.eval_epochs = r.list<int>("eval_epochs", p.eval_epochs, int_of);
    p.average_window = to_int(r.integer("average_window", p.average_window), r.key_path("average_window"));
    p.num_probes = to_int(r.integer("num_probes", p.num_probes), r.key_path("num_probes"));
    p.probe_batch = to_int(r.integer("probe_batch", p.probe_batch), r.key_path("probe_batch"));
    p.trials = to_int(r.integer("trials", p.trials), r.key_path("trials"));
    p.delta = r.number("delta", p.delta);
    p.gammas = r.list<double>("gammas", p.gammas, TableReader::as_number);
    p.distill_bound = r.boolean("distill_bound", p.distill_bound);
    r.reject_unknown();
    return p;
}

void check(bool ok, std::string_view key, std::string_view what) {
    if (!ok) throw ValidationError(std::string(key), std::string(what));
}

void validate_net(const NetConfig& net, std::string_view name, const DatasetConfig& ds) {
    const std::string key = std::string(name) + ".widths";
    check(net.widths.size() >= 2, key, "needs at least an input and an output width");
    for (int w : net.widths) check(w >= 1, key, "widths must be >= 1");
    check(net.widths.front() == ds.dim, key, "input width must equal dataset.dim");
    const int out = net.widths.back();
    check(out == ds.classes || (out == 1 && ds.classes == 2), key,
          "output width must equal dataset.classes (or 1 for two classes)");
}

void validate_train(const TrainSection& t, std::string_view name) {
    const std::string s(name);
    check(t.epochs >= 1, s + ".epochs", "must be >= 1");
    check(t.batch_size >= 0, s + ".batch_size", "must be >= 0");
    check(std::isfinite(t.lr) && t.lr >= 0.0, s + ".lr", "must be finite and >= 0");
    check(t.momentum >= 0.0 && t.momentum < 1.0, s + ".momentum", "must lie in [0, 1)");
    check(t.warmup_epochs >= 0, s + ".warmup_epochs", "must be >= 0");
    for (std::size_t k = 0; k < t.schedule.size(); ++k) {
        check(t.schedule[k].first >= 0, s + ".schedule", "epochs must be >= 0");
        check(t.schedule[k].second > 0.0 && std::isfinite(t.schedule[k].second), s + ".schedule",
              "divisors must be finite and > 0");
        check(k == 0 || t.schedule[k].first > t.schedule[k - 1].first, s + ".schedule",
              "epochs must be strictly increasing");
    }
}

void validate_loss_width(LossTag tag, int width, std::string_view key) {
    const bool ce_family = tag == LossTag::ce || tag == LossTag::kd_ce || tag == LossTag::mixture;
    check(!(ce_family && width < 2), key, "cross-entropy losses need an output width >= 2");
}

// TOML floats must carry a fraction or exponent to stay floats on reparse.
std::string toml_double(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string quoted(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

template <typename T, typename Fmt>
std::string toml_list(const std::vector<T>& xs, Fmt fmt) {
    std::string out = "[";
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k > 0) out += ", ";
        out += fmt(xs[k]);
    }
    return out + "]";
}

void write_net(std::ostringstream& os, std::string_view name, const NetConfig& net) {
    os << "\n[" << name << "]\n"
       << "widths = " << toml_list(net.widths, [](int w) { return std::to_string(w); }) << "\n"
       << "activation = " << quoted(model::to_string(net.activation)) << "\n"
       << "init = " << quoted(model::to_string(net.init)) << "\n";
}

void write_train(std::ostringstream& os, std::string_view name, const TrainSection& t) {
    os << "\n[" << name << "]\n"
       << "epochs = " << t.epochs << "\n"
       << "batch_size = " << t.batch_size << "\n"
       << "lr = " << toml_double(t.lr) << "\n"
       << "momentum = " << toml_double(t.momentum) << "\n"
       << "nesterov = " << (t.nesterov ? "true" : "false") << "\n"
       << "warmup_epochs = " << t.warmup_epochs << "\n"
       << "schedule = " << toml_list(t.schedule, [](const std::pair<int, double>& e) {
              return "[" + std::to_string(e.first) + ", " + toml_double(e.second) + "]";
          }) << "\n";
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Recipe r) {
    for (const auto& [value, name] : kRecipeNames)
        if (value == r) return name;
    return "unknown";
}

Recipe recipe_from_string(std::string_view s) {
    for (const auto& [value, name] : kRecipeNames)
        if (name == s) return value;
    throw InvalidSpec("unknown recipe '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
    const DatasetConfig& ds = dataset;
    check(ds.classes >= 2, "dataset.classes", "must be >= 2");
    check(ds.dim >= 2, "dataset.dim", "must be >= 2");
    check(ds.n >= ds.classes, "dataset.n", "must be >= dataset.classes");
    check(ds.n_test >= 2, "dataset.n_test", "must be >= 2");
    check(std::isfinite(ds.noise) && ds.noise >= 0.0, "dataset.noise", "must be finite and >= 0");
    check(ds.family != data::Family::two_rings || ds.classes == 2, "dataset.classes", "two_rings has 2 classes");

    validate_net(teacher, "teacher", ds);
    validate_net(student, "student", ds);
    validate_train(train, "train");
    if (teacher_train) validate_train(*teacher_train, "teacher_train");

    const RecipeParams& p = params;
    const int t_out = teacher.widths.back();
    const int s_out = student.widths.back();
    check(p.teacher_loss == LossTag::ce || p.teacher_loss == LossTag::mse, "params.teacher_loss", "must be ce or mse");
    check(p.student_loss == LossTag::ce || p.student_loss == LossTag::mse, "params.student_loss", "must be ce or mse");
    check(p.kd_loss == LossTag::kd_ce || p.kd_loss == LossTag::kd_mse || p.kd_loss == LossTag::mixture,
          "params.kd_loss", "must be kd_ce, kd_mse or mixture");
    validate_loss_width(p.teacher_loss, t_out, "params.teacher_loss");
    validate_loss_width(p.student_loss, s_out, "params.student_loss");
    validate_loss_width(p.kd_loss, s_out, "params.kd_loss");
    check(p.tau > 0.0 && std::isfinite(p.tau), "params.tau", "must be finite and > 0");
    check(!p.taus.empty(), "params.taus", "must not be empty");
    for (double t : p.taus) check(t > 0.0 && std::isfinite(t), "params.taus", "entries must be finite and > 0");
    check(!p.periods.empty(), "params.periods", "must not be empty");
    for (int v : p.periods) check(v >= 1, "params.periods", "entries must be >= 1");
    check(!p.alphas.empty(), "params.alphas", "must not be empty");
    for (double a : p.alphas) check(a >= 0.0 && a <= 1.0, "params.alphas", "entries must lie in [0, 1]");
    check(!p.seeds.empty(), "params.seeds", "must not be empty");
    check(p.eval_size >= 1 && p.eval_size <= ds.n_test, "params.eval_size", "must lie in [1, dataset.n_test]");
    check(static_cast<long long>(p.eval_size) * s_out <= ntk::kMaxDenseOrder, "params.eval_size",
          "eval_size times the output width exceeds the dense kernel limit");
    for (int e : p.eval_epochs)
        check(e >= 0 && e <= train.epochs, "params.eval_epochs", "entries must lie in [0, train.epochs]");
    check(p.average_window >= 0, "params.average_window", "must be >= 0");
    check(p.num_probes >= 2, "params.num_probes", "must be >= 2");
    check(p.probe_batch >= 1, "params.probe_batch", "must be >= 1");
    if (recipe == Recipe::ntk_similarity)
        check(p.probe_batch <= ds.n, "params.probe_batch", "must not exceed dataset.n");
    check(p.trials >= 1, "params.trials", "must be >= 1");
    check(p.delta > 0.0 && p.delta < 1.0, "params.delta", "must lie in (0, 1)");
    for (double g : p.gammas) check(g > 0.0 && std::isfinite(g), "params.gammas", "entries must be finite and > 0");

    if (recipe == Recipe::bound_check) {
        check(ds.classes == 2, "dataset.classes", "bound_check needs a binary task");
        check(s_out == 1, "student.widths", "bound_check needs a single-output student");
        check(static_cast<long long>(ds.n) <= ntk::kMaxDenseOrder, "dataset.n", "exceeds the dense kernel limit");
        if (p.distill_bound) check(t_out == 1, "teacher.widths", "the distillation bound needs a single-output teacher");
    }
    if (recipe == Recipe::alpha_sweep) validate_loss_width(LossTag::mixture, s_out, "student.widths");
    if (recipe != Recipe::bound_check) check(t_out == s_out, "student.widths", "teacher and student output widths differ");
}

ExperimentConfig parse_config(std::string_view text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        const auto& where = e.source().begin;
        throw ParseError(std::string(e.description()), static_cast<int>(where.line), static_cast<int>(where.column));
    }

    TableReader r(root, "");
    ExperimentConfig cfg;
    const toml::node* recipe = r.find("recipe");
    if (recipe == nullptr) throw ValidationError("recipe", "missing key");
    if (!recipe->is_string()) throw ValidationError("recipe", "expected a string");
    cfg.recipe = wrap_enum("recipe", [&] { return recipe_from_string(recipe->as_string()->get()); });
    const std::int64_t seed = r.integer("seed", 0);
    if (seed < 0) throw ValidationError("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.out_dir = r.string("out_dir", cfg.out_dir);

    if (const toml::table* t = r.subtable("dataset")) {
        TableReader d(*t, "dataset");
        const std::string family = d.string("family", std::string(data::to_string(cfg.dataset.family)));
        cfg.dataset.family = wrap_enum("dataset.family", [&] { return data::family_from_string(family); });
        cfg.dataset.n = to_int(d.integer("n", cfg.dataset.n), "dataset.n");
        cfg.dataset.n_test = to_int(d.integer("n_test", cfg.dataset.n_test), "dataset.n_test");
        cfg.dataset.classes = to_int(d.integer("classes", cfg.dataset.classes), "dataset.classes");
        cfg.dataset.dim = to_int(d.integer("dim", cfg.dataset.dim), "dataset.dim");
        cfg.dataset.noise = d.number("noise", cfg.dataset.noise);
        d.reject_unknown();
    }
    cfg.teacher = read_net(r, "teacher");
    cfg.student = read_net(r, "student");
    if (const toml::table* t = r.subtable("train")) cfg.train = read_train(*t, "train");
    if (const toml::table* t = r.subtable("teacher_train")) cfg.teacher_train = read_train(*t, "teacher_train");
    cfg.params = read_params(r.subtable("params"));
    r.reject_unknown();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "recipe = " << quoted(to_string(cfg.recipe)) << "\n"
       << "seed = " << cfg.seed << "\n"
       << "out_dir = " << quoted(cfg.out_dir) << "\n";
    os << "\n[dataset]\n"
       << "family = " << quoted(data::to_string(cfg.dataset.family)) << "\n"
       << "n = " << cfg.dataset.n << "\n"
       << "n_test = " << cfg.dataset.n_test << "\n"
       << "classes = " << cfg.dataset.classes << "\n"
       << "dim = " << cfg.dataset.dim << "\n"
       << "noise = " << toml_double(cfg.dataset.noise) << "\n";
    write_net(os, "teacher", cfg.teacher);
    write_net(os, "student", cfg.student);
    write_train(os, "train", cfg.train);
    if (cfg.teacher_train) write_train(os, "teacher_train", *cfg.teacher_train);

    const RecipeParams& p = cfg.params;
    auto ints = [](int v) { return std::to_string(v); };
    os << "\n[params]\n"
       << "teacher_loss = " << quoted(to_string(p.teacher_loss)) << "\n"
       << "student_loss = " << quoted(to_string(p.student_loss)) << "\n"
       << "kd_loss = " << quoted(to_string(p.kd_loss)) << "\n"
       << "tau = " << toml_double(p.tau) << "\n"
       << "taus = " << toml_list(p.taus, toml_double) << "\n"
       << "periods = " << toml_list(p.periods, ints) << "\n"
       << "alphas = " << toml_list(p.alphas, toml_double) << "\n"
       << "seeds = " << toml_list(p.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
       << "eval_size = " << p.eval_size << "\n"
       << "eval_epochs = " << toml_list(p.eval_epochs, ints) << "\n"
       << "average_window = " << p.average_window << "\n"
       << "num_probes = " << p.num_probes << "\n"
       << "probe_batch = " << p.probe_batch << "\n"
       << "trials = " << p.trials << "\n"
       << "delta = " << toml_double(p.delta) << "\n"
       << "gammas = " << toml_list(p.gammas, toml_double) << "\n"
       << "distill_bound = " << (p.distill_bound ? "true" : "false") << "\n";
    return os.str();
}

std::string config_digest(const ExperimentConfig& cfg) {
    ExperimentConfig identity = cfg;
    identity.out_dir = ExperimentConfig{}.out_dir;
    const std::string text = serialize_config(identity);
    unsigned char hash[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), hash, &len, EVP_sha256(), nullptr) != 1)
        throw Error("config digest: SHA-256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += kHex[hash[k] >> 4];
        out += kHex[hash[k] & 0xf];
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

std::vector<double> effective_gammas(const RecipeParams& p) {
    if (!p.gammas.empty()) return p.gammas;
    std::vector<double> out;
    for (int e = -6; e <= 3; ++e) out.push_back(std::ldexp(1.0, e));
    return out;
}

data::SyntheticSpec dataset_spec(const ExperimentConfig& cfg) {
    data::SyntheticSpec spec;
    spec.family = cfg.dataset.family;
    spec.n = cfg.dataset.n;
    spec.d = cfg.dataset.classes;
    spec.p = cfg.dataset.dim;
    spec.noise = cfg.dataset.noise;
    spec.seed = derive_seed(cfg.seed, "dataset");
    return spec;
}

model::MlpSpec net_spec(const NetConfig& net, std::uint64_t seed) {
    return model::MlpSpec{net.widths, net.activation, net.init, seed};
}

distill::TrainConfig train_config(const TrainSection& t, int n, std::uint64_t seed) {
    distill::TrainConfig c;
    c.epochs = t.epochs;
    c.batch_size = t.batch_size > 0 ? t.batch_size : distill::default_batch_size(n);
    c.lr = t.lr;
    c.momentum = t.momentum;
    c.nesterov = t.nesterov;
    c.warmup_epochs = t.warmup_epochs;
    c.schedule = t.schedule;
    c.seed = seed;
    return c;
}

}  // namespace kdlab::harness

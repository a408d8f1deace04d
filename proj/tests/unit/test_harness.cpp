#include "kdlab/error.hpp"
#include "kdlab/harness/config.hpp"
#include "kdlab/harness/csv.hpp"
#include "kdlab/harness/recipes.hpp"
#include "kdlab/harness/report.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <sys/wait.h>

using namespace kdlab;
using namespace kdlab::harness;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(recipe = "complexity_curve"
seed = 3

[dataset]
family = "two_rings"
n = 48
n_test = 24
dim = 2

[teacher]
widths = [2, 16, 2]

[student]
widths = [2, 4, 2]

[train]
epochs = 2
batch_size = 16

[params]
eval_size = 8
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kdlab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KDLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
    const auto cfg = parse_config(kMinimal);
    CHECK(cfg.recipe == Recipe::complexity_curve);
    CHECK(cfg.seed == 3);
    CHECK(cfg.dataset.n == 48);
    CHECK(cfg.teacher.widths == std::vector<int>{2, 16, 2});
    CHECK(cfg.train.epochs == 2);
    CHECK(cfg.train.lr == 0.05);
    CHECK(cfg.params.eval_size == 8);
    CHECK(cfg.params.tau == 4.0);
    CHECK_FALSE(cfg.teacher_train.has_value());
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("misspelled keys are rejected by name") {
    std::string text = kMinimal;
    text.replace(text.find("epochs = 2"), 10, "epochss = 2");
    try {
        parse_config(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.key() == "train.epochss");
        CHECK(std::string(e.what()).find("epochss") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(kMinimal + "bogus = 1\n"), ValidationError);
}

TEST_CASE("invalid values name their key") {
    auto expect_key = [](const std::string& text, const std::string& key) {
        try {
            parse_config(text).validate();
            FAIL("expected ValidationError for " << key);
        } catch (const ValidationError& e) {
            CHECK(e.key() == key);
        }
    };
    std::string bad_recipe = kMinimal;
    bad_recipe.replace(0, bad_recipe.find('\n'), "recipe = \"nope\"");
    expect_key(bad_recipe, "recipe");
    std::string bad_width = kMinimal;
    bad_width.replace(bad_width.find("[2, 4, 2]"), 9, "[3, 4, 2]");
    expect_key(bad_width, "student.widths");
    std::string bad_lr = kMinimal;
    bad_lr.replace(bad_lr.find("batch_size = 16"), 15, "lr = -1.0");
    expect_key(bad_lr, "train.lr");
    std::string bad_type = kMinimal;
    bad_type.replace(bad_type.find("n = 48"), 6, "n = \"48\"");
    expect_key(bad_type, "dataset.n");
}

TEST_CASE("malformed TOML reports line and column") {
    const std::string text = "recipe = \"complexity_curve\"\nseed = 3\n[dataset\nn = 4\n";
    try {
        parse_config(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() > 0);
    }
}

TEST_CASE("config serialization round trips") {
    auto cfg = parse_config(kMinimal);
    cfg.teacher_train = cfg.train;
    cfg.teacher_train->lr = 0.005;
    cfg.train.schedule = {{1, 10.0}};
    cfg.params.gammas = {0.5, 1.0};
    cfg.params.taus = {1.0, 3.5};
    cfg.params.seeds = {4, 5};
    cfg.params.delta = 1e-3;
    const std::string text = serialize_config(cfg);
    const auto back = parse_config(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
    CHECK(config_digest(back) == config_digest(cfg));
    CHECK(config_digest(cfg).size() == 64);
    cfg.out_dir = "elsewhere";
    CHECK(config_digest(back) == config_digest(cfg));
    cfg.seed = 4;
    CHECK(config_digest(back) != config_digest(cfg));
}

TEST_CASE("derive_seed separates streams") {
    CHECK(derive_seed(1, "dataset") == derive_seed(1, "dataset"));
    CHECK(derive_seed(1, "dataset") != derive_seed(2, "dataset"));
    CHECK(derive_seed(1, "dataset") != derive_seed(1, "probes"));
    CHECK(derive_seed(1, "student_sgd", 0) != derive_seed(1, "student_sgd", 1));
}

TEST_CASE("csv emission") {
    const fs::path dir = scratch("csv");
    SUBCASE("header-only table") {
        const CsvTable t({"epoch", "loss"});
        emit_csv(t, dir / "empty.csv");
        CHECK(read_all(dir / "empty.csv") == "epoch,loss\n");
        CHECK(read_csv_file(dir / "empty.csv") == t);
    }
    SUBCASE("byte-identical re-emission and non-finite values") {
        CsvTable t({"epoch", "target_kind", "raw"});
        t.add_row({std::int64_t{0}, std::string("random"), std::numeric_limits<double>::infinity()});
        t.add_row({std::int64_t{1}, std::string("with,comma \"q\""), 0.1});
        t.add_row({std::int64_t{2}, std::string("nan"), std::numeric_limits<double>::quiet_NaN()});
        emit_csv(t, dir / "a.csv");
        emit_csv(t, dir / "b.csv");
        const std::string a = read_all(dir / "a.csv");
        CHECK(a == read_all(dir / "b.csv"));
        CHECK(a.find(",inf\n") != std::string::npos);
        const CsvTable back = read_csv_file(dir / "a.csv");
        CHECK(back == t);
        CHECK(std::isinf(back.number(0, "raw")));
        CHECK(back.number(1, "raw") == 0.1);
        CHECK(std::isnan(back.number(2, "raw")));
        CHECK(back.rows[1][1] == "with,comma \"q\"");
    }
    CHECK_THROWS_AS(CsvTable({"a"}).add_row({1.0, 2.0}), DimensionMismatch);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), FormatError);
    CHECK_THROWS_AS(read_csv_file(dir / "missing.csv"), IoError);
}

TEST_CASE("complexity_curve schema") {
    auto cfg = parse_config(kMinimal);
    const auto rep = run_recipe(cfg, RunOptions{"", false});
    CHECK(rep.recipe == "complexity_curve");
    CHECK(rep.config_digest == config_digest(cfg));
    const CsvTable& t = rep.table("complexity");
    CHECK(t.header == std::vector<std::string>{"epoch", "target_kind", "raw", "adjusted", "adjusted_star",
                                               "normalized", "trace_k", "jitter"});
    // Epochs 0..2, four target families each.
    CHECK(t.rows.size() == 3 * 4);
    std::set<std::string> kinds;
    for (const auto& row : t.rows) kinds.insert(row[1]);
    CHECK(kinds == std::set<std::string>{"random", "dataset", "offline_teacher", "online_teacher"});
}

TEST_CASE("recipe errors carry the recipe name") {
    auto cfg = parse_config(kMinimal);
    cfg.params.eval_size = 1000;
    try {
        run_recipe(cfg, RunOptions{"", false});
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(e.key() == "params.eval_size");
    } catch (const RecipeError& e) {
        CHECK(std::string(e.what()).find("complexity_curve") != std::string::npos);
    }
}

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("cli");
    write_all(dir / "ok.toml", kMinimal);
    std::string typo = kMinimal;
    typo.replace(typo.find("epochs = 2"), 10, "epochss = 2");
    write_all(dir / "typo.toml", typo);
    write_all(dir / "broken.toml", "recipe = \n");

    const std::string out = (dir / "out").string();
    CHECK(run_cli("run " + (dir / "ok.toml").string() + " --out-dir " + out + " --threads 2") == 0);
    CHECK(fs::exists(dir / "out" / "complexity.csv"));
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "config.toml"));
    CHECK(run_cli("complexity " + (dir / "ok.toml").string() + " --out-dir " + out + " --seed 9") == 0);

    CHECK(run_cli("run " + (dir / "typo.toml").string()) == 2);
    CHECK(run_cli("run " + (dir / "broken.toml").string()) == 2);
    CHECK(run_cli("run " + (dir / "absent.toml").string()) == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("frobnicate x.toml") == 2);

    // A runtime failure: the output location is an existing regular file.
    write_all(dir / "blocker", "x");
    CHECK(run_cli("train-teacher " + (dir / "ok.toml").string() + " --out-dir " + (dir / "blocker").string()) == 1);
}

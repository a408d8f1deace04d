// Command-line front end for the kdlab experiment recipes.
#include "kdlab/error.hpp"
#include "kdlab/format.hpp"
#include "kdlab/harness/config.hpp"
#include "kdlab/harness/recipes.hpp"
#include "kdlab/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Args {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_common(CLI::App* cmd, Args& args) {
    cmd->add_option("config", args.config, "experiment config (TOML)")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory (overrides out_dir)");
    cmd->add_option("--seed", args.seed, "master seed (overrides seed)");
    cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

void print_report(const kdlab::harness::RunReport& rep, const std::string& dir) {
    std::cout << rep.recipe << ": wrote " << rep.tables.size() << " table(s) to " << dir << "\n";
    std::cout << "config_digest " << rep.config_digest << "\n";
    for (const auto& [key, value] : rep.summary) std::cout << key << " " << kdlab::format_double(value) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace kdlab::harness;

    CLI::App app{"kdlab: kernel views of knowledge distillation"};
    app.require_subcommand(1);
    Args args;
    CLI::App* run = app.add_subcommand("run", "run the recipe named in the config");
    CLI::App* teacher = app.add_subcommand("train-teacher", "train the teacher and save per-epoch checkpoints");
    CLI::App* complexity = app.add_subcommand("complexity", "supervision complexity curves");
    CLI::App* ntk_sim = app.add_subcommand("ntk-sim", "student/teacher NTK similarity");
    CLI::App* bound = app.add_subcommand("bound", "generalization bound validity check");
    for (CLI::App* cmd : {run, teacher, complexity, ntk_sim, bound}) add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ExperimentConfig cfg;
    try {
        cfg = load_config(args.config);
        if (args.seed) cfg.seed = *args.seed;
        if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
        if (complexity->parsed() && cfg.recipe != Recipe::temperature_sweep) cfg.recipe = Recipe::complexity_curve;
        if (ntk_sim->parsed()) cfg.recipe = Recipe::ntk_similarity;
        if (bound->parsed()) cfg.recipe = Recipe::bound_check;
        cfg.validate();
    } catch (const kdlab::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const kdlab::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const kdlab::IoError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        kdlab::set_num_threads(args.threads);
        const RunOptions opts{cfg.out_dir, true};
        const RunReport rep = teacher->parsed() ? run_train_teacher(cfg, opts) : run_recipe(cfg, opts);
        print_report(rep, cfg.out_dir);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "otafl/runner.hpp"
#include "otafl/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitPartial = 4;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw otafl::cli::ScenarioError("cannot read config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Machine-readable error record on stderr (one JSON line).
void print_error(int code, const std::string& msg) {
    nlohmann::json j;
    j["code"] = code;
    j["error"] = msg;
    std::cerr << j.dump() << "\n";
}

otafl::cli::SelectorKind parse_selector(const std::string& name) {
    const auto kind = otafl::cli::selector_from_string(name);
    if (!kind)
        throw otafl::cli::ScenarioError("--selector: unknown selector '" + name +
                                        "' (expected gwo|ga|dp|mab|random)");
    return *kind;
}

struct Overrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int rounds = 0;
    bool has_rounds = false;
    std::string selector;
    std::string out_dir;  // flag or OTAFL_OUT_DIR; empty -> config's out_dir
};

otafl::cli::ScenarioConfig load_with_overrides(const Overrides& o, bool allow_default) {
    otafl::cli::ScenarioConfig cfg = o.config_path.empty() && allow_default
                                         ? otafl::cli::default_scenario()
                                         : otafl::cli::scenario_from_json(read_file(o.config_path));
    if (o.has_seed) {
        cfg.sys.master_seed = o.seed;
        // A reseed regenerates a generator-backed fleet so `gen --seed S` and
        // `run --seed S` agree on what fleet S means.
        if (cfg.generator.has_value()) cfg.fleet.clear();
    }
    if (!o.selector.empty()) cfg.selector.kind = parse_selector(o.selector);
    if (o.has_rounds) {
        if (o.rounds < 1) throw otafl::cli::ScenarioError("--rounds: must be >= 1");
        cfg.sys.total_rounds = o.rounds;
    }
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    return cfg;
}

int do_gen(const Overrides& o) {
    otafl::cli::ScenarioConfig cfg = load_with_overrides(o, /*allow_default=*/true);
    otafl::cli::materialize_fleet(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / "scenario.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << otafl::cli::to_json(cfg);
    std::cout << path.string() << "\n";
    return kExitOk;
}

int do_run(const Overrides& o) {
    otafl::cli::ScenarioConfig cfg = load_with_overrides(o, /*allow_default=*/false);
    const otafl::cli::RunOutcome outcome = otafl::cli::run_scenario(cfg, cfg.out_dir);
    if (!outcome.ok()) {
        print_error(kExitRuntime, outcome.result.error);
        return kExitRuntime;
    }
    std::cout << outcome.out_dir << "\n";
    return kExitOk;
}

int do_sweep(const Overrides& o, std::vector<std::string> selector_names,
             std::vector<std::uint64_t> seeds) {
    otafl::cli::ScenarioConfig cfg = load_with_overrides(o, /*allow_default=*/false);
    if (selector_names.empty()) selector_names = {"gwo", "ga", "dp", "mab", "random"};
    std::vector<otafl::cli::SelectorKind> selectors;
    for (const auto& name : selector_names) selectors.push_back(parse_selector(name));
    if (seeds.empty()) seeds = {cfg.sys.master_seed};

    const otafl::cli::SweepOutcome outcome =
        otafl::cli::run_sweep(cfg, selectors, seeds, cfg.out_dir);
    std::cout << outcome.table_path << "\n";
    if (outcome.partial) {
        print_error(kExitPartial, "sweep finished with failed cells (see sweep.csv)");
        return kExitPartial;
    }
    return kExitOk;
}

int do_validate(const Overrides& o) {
    otafl::cli::ScenarioConfig cfg = load_with_overrides(o, /*allow_default=*/false);
    otafl::cli::materialize_fleet(cfg);
    const otafl::domain::ValidationReport report =
        otafl::domain::validate_fleet(cfg.fleet, cfg.sys);
    nlohmann::json j;
    j["ok"] = report.ok();
    j["errors"] = report.errors;
    j["warnings"] = report.warnings;
    std::cout << j.dump(2) << "\n";
    return report.ok() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Client-selection simulator for over-the-air federated learning"};
    app.require_subcommand(1);

    Overrides gen_o, run_o, sweep_o, val_o;
    std::vector<std::string> sweep_selectors;
    std::vector<std::uint64_t> sweep_seeds;

    CLI::App* gen = app.add_subcommand("gen", "Write a scenario file (defaults or --config base)");
    gen->add_option("--config", gen_o.config_path, "Base config; omit for built-in defaults");
    CLI::Option* gen_seed = gen->add_option("--seed", gen_o.seed, "Master seed override");
    gen->add_option("--out-dir", gen_o.out_dir, "Output directory")->envname("OTAFL_OUT_DIR");

    CLI::App* run = app.add_subcommand("run", "Run one experiment from a config");
    run->add_option("--config", run_o.config_path, "Scenario config path")->required();
    CLI::Option* run_seed = run->add_option("--seed", run_o.seed, "Master seed override");
    CLI::Option* run_rounds = run->add_option("--rounds", run_o.rounds, "Round-count override");
    run->add_option("--selector", run_o.selector, "Selector override (gwo|ga|dp|mab|random)");
    run->add_option("--out-dir", run_o.out_dir, "Output directory")->envname("OTAFL_OUT_DIR");

    CLI::App* sweep = app.add_subcommand("sweep", "Selector x seed comparison grid");
    sweep->add_option("--config", sweep_o.config_path, "Scenario config path")->required();
    sweep->add_option("--selector", sweep_selectors,
                      "Selectors to sweep (repeat or comma-separate; default all)")
        ->delimiter(',');
    sweep->add_option("--seed", sweep_seeds,
                      "Seeds to sweep (repeat or comma-separate; default config seed)")
        ->delimiter(',');
    CLI::Option* sweep_rounds =
        sweep->add_option("--rounds", sweep_o.rounds, "Round-count override");
    sweep->add_option("--out-dir", sweep_o.out_dir, "Output directory")->envname("OTAFL_OUT_DIR");

    CLI::App* val = app.add_subcommand("validate", "Check a config and its fleet invariants");
    val->add_option("--config", val_o.config_path, "Scenario config path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    gen_o.has_seed = gen_seed->count() > 0;
    run_o.has_seed = run_seed->count() > 0;
    run_o.has_rounds = run_rounds->count() > 0;
    sweep_o.has_rounds = sweep_rounds->count() > 0;

    try {
        if (app.got_subcommand(gen)) return do_gen(gen_o);
        if (app.got_subcommand(run)) return do_run(run_o);
        if (app.got_subcommand(sweep)) return do_sweep(sweep_o, sweep_selectors, sweep_seeds);
        if (app.got_subcommand(val)) return do_validate(val_o);
    } catch (const otafl::cli::ScenarioError& e) {
        print_error(kExitConfig, e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        print_error(kExitRuntime, e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "otafl/fl_sim.hpp"
#include "otafl/metrics.hpp"
#include "otafl/scenario.hpp"

namespace otafl::cli {

// Builds the concrete selector for a scenario. Per-round optimizer seeds
// derive from (master_seed, round), so two runs with the same config and
// seed make identical decisions.
std::unique_ptr<fl_sim::SelectorDriver> make_driver(const SelectorSpec& spec,
                                                    std::uint64_t master_seed);

// Assembles the mutable experiment state: materializes the fleet, validates
// it, generates and partitions the synthetic dataset (test split carved off
// the same source), and initializes the global model. Throws ScenarioError
// on an invalid fleet.
fl_sim::SimState build_sim_state(const ScenarioConfig& cfg);

struct RunOutcome {
    fl_sim::ExperimentResult result;
    metrics::ExperimentSummary summary;  // over the completed records
    std::string out_dir;

    bool ok() const { return result.ok(); }
};

// Executes the scenario and writes into out_dir:
//   scenario.json   the exact (materialized) config that ran
//   rounds.csv      round, loss, accuracy, delay_s, energy_j, iee,
//                   selected_count, failures   (accuracy and iee in percent)
//   selections.csv  round, client_id, delay_s, energy_j, reliability,
//                   bandwidth, failed          (one row per selected client)
//   trace.csv       round, iteration, best_fitness (iterative selectors only)
//   summary.json    the ExperimentSummary plus run identity
//   meta.json       timestamp sidecar — the only non-deterministic output
// On a round error the partial rows are still flushed and summary.json
// carries the message. Output bytes are fully determined by (config, seed)
// apart from meta.json.
RunOutcome run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

struct SweepRow {
    std::string selector;
    std::uint64_t seed = 0;
    metrics::ExperimentSummary summary;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

struct SweepOutcome {
    std::vector<SweepRow> rows;  // cell rows in execution order, then means
    bool partial = false;        // at least one cell failed
    std::string table_path;
};

// Cross product of selectors and seeds on the same per-seed fleet; one
// subdirectory per cell plus sweep.csv with a mean row per selector
// (arithmetic means over its successful cells).
SweepOutcome run_sweep(const ScenarioConfig& cfg, const std::vector<SelectorKind>& selectors,
                       const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

}  // namespace otafl::cli

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otafl/baselines.hpp"
#include "otafl/domain.hpp"
#include "otafl/fitness.hpp"
#include "otafl/gwo.hpp"
#include "otafl/learner.hpp"
#include "otafl/metrics.hpp"

namespace otafl::cli {

// Config-layer failure (parse error, missing/unknown/invalid field). The
// message carries the dotted field path; the CLI maps this to exit code 2.
struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FieldRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Uniform sampling ranges for every ClientProfile field. Defaults are the
// calibrated reference family: budgets that bind but leave feasible subsets,
// failure tiers {0,1,2}, and selection quotas low enough that the total
// fairness demand (sum of c_i rounds) stays schedulable under the shared
// bandwidth — late forced waves still produce multi-client rounds, but no
// feasible client's quota is lost to an end-of-horizon bandwidth crunch.
struct GeneratorSpec {
    int n = 10;
    FieldRange data_size{60, 200};  // integer samples
    FieldRange cycles_per_sample{5e5, 2e6};
    FieldRange cpu_freq{5e8, 2e9};
    FieldRange cpu_headroom{1.0, 1.5};  // cpu_freq_max = cpu_freq * headroom
    FieldRange iteration_factor{1.0, 3.0};
    FieldRange target_accuracy{0.05, 0.5};
    FieldRange energy_coeff{2e-28, 1e-27};
    FieldRange tx_power{0.05, 0.5};
    FieldRange power_headroom{1.0, 2.0};  // tx_power_max = tx_power * headroom
    FieldRange bandwidth{5e5, 2e6};
    FieldRange channel_gain{1e-7, 1e-5};
    int max_failures = 2;  // failure_count uniform over {0, ..., max_failures}
    FieldRange delay_budget{0.5, 2.0};
    FieldRange energy_budget{0.5, 2.0};
    FieldRange min_selection_fraction{0.1, 0.25};
    // total_bandwidth = sum of client bandwidths / inflation, so the shared
    // budget binds for the all-clients mask but not for small subsets.
    double bandwidth_inflation = 1.25;
};

enum class SelectorKind { Gwo, Ga, Dp, Mab, Random };

const char* to_string(SelectorKind k);
std::optional<SelectorKind> selector_from_string(const std::string& s);

// Tagged selector section: `kind` picks which sub-config applies. Selector
// seeds are not part of the config; the runner derives per-round streams
// from the master seed.
struct SelectorSpec {
    SelectorKind kind = SelectorKind::Gwo;
    gwo::GwoConfig gwo;
    baselines::GaConfig ga;
    baselines::DpConfig dp;
    baselines::MabConfig mab;
    int random_k = 3;
};

// Synthetic Gaussian-mixture data block (class count lives in the trainer
// section).
struct DataSpec {
    int feature_dim = 8;
    double class_separation = 2.0;
    double noise_std = 2.0;
    double dirichlet_alpha = 5.0;
    double test_fraction = 0.2;
};

struct ScenarioConfig {
    domain::SystemConfig sys;
    // Explicit profiles win when present; the generator block is kept as
    // provenance so generated files round-trip byte-for-byte.
    std::vector<domain::ClientProfile> fleet;
    std::optional<GeneratorSpec> generator;
    fl_sim::TrainerConfig trainer;
    DataSpec data;
    SelectorSpec selector;
    fitness::FitnessWeights weights;
    metrics::ConvergenceParams convergence;
    std::string out_dir = "out";
};

// Samples an explicit fleet from the generator block. One RNG stream per
// fleet (tag below), fields drawn in declaration order per client, so the
// same (spec, seed) pair always yields the same profiles byte-for-byte.
// historical_loss starts at ln(num_classes), the uniform predictor's loss.
std::vector<domain::ClientProfile> generate_fleet(const GeneratorSpec& gen, int num_classes,
                                                  std::uint64_t seed);

inline constexpr std::uint64_t kFleetStreamTag = 0xF1EE7;

// When only a generator block is present, fills cfg.fleet from it (seeded by
// sys.master_seed) and sets sys.total_bandwidth from bandwidth_inflation.
// A config with explicit profiles is returned unchanged.
void materialize_fleet(ScenarioConfig& cfg);

// The calibrated 10-client reference scenario (generator block, GWO
// selector, 5-class synthetic data, 30 rounds).
ScenarioConfig default_scenario();

// Deterministic serialization: sorted keys, two-space indent, trailing
// newline; doubles round-trip exactly.
std::string to_json(const ScenarioConfig& cfg);

// Parses and validates. Throws ScenarioError naming the offending field
// (dotted path) or the parse location.
ScenarioConfig scenario_from_json(const std::string& text);

}  // namespace otafl::cli

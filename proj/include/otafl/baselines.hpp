#pragma once

#include <cstdint>
#include <vector>

#include "otafl/domain.hpp"
#include "otafl/fitness.hpp"

namespace otafl::baselines {

// Multi-armed-bandit bookkeeping: per-client pull counts and running mean
// rewards. The experiment loop is the single writer.
struct BanditState {
    std::vector<std::int64_t> pulls;
    std::vector<double> mean_reward;
    int total_rounds = 0;

    explicit BanditState(std::size_t n) : pulls(n, 0), mean_reward(n, 0.0) {}

    // Credits the round reward equally to every selected client and advances
    // the round counter.
    void update(const domain::SelectionMask& mask, double reward);
};

struct DpConfig {
    // Per-round energy capacity in joules; <= 0 selects the default
    // 0.5 * sum of per-client energy budgets.
    double capacity = 0.0;
    int bins = 1000;  // E_dim: quantization resolution of the knapsack table
};

struct GaConfig {
    int population = 40;  // must be even
    int generations = 50;
    double crossover_rate = 0.9;
    double mutation_rate = -1.0;  // < 0 selects the default 1/n
    int tournament = 3;
    std::uint64_t seed = 1;

    bool valid(std::size_t n) const;
};

struct MabConfig {
    int cardinality = 0;  // <= 0 selects the default ceil(n/5)
};

// 0/1 knapsack over hard-feasible clients: weight = quantized round energy,
// value = 1 - normalized historical loss. Exact over ceil(capacity/quantum)
// bins; returns the argmax-value subset within capacity (empty when nothing
// fits, which the round loop treats as an aborted selection).
domain::SelectionMask dp_select(const fitness::FitnessEvaluator& eval, const DpConfig& cfg,
                                int round = 0);

// UCB1 exploration index: mean + sqrt(2 ln t / n_i); +infinity for unpulled
// arms so every client is tried once.
double ucb_index(const BanditState& state, std::size_t client_id, int t);

// Top-k by UCB index among clients passing hard per-client constraints,
// greedily respecting the shared bandwidth budget. Ties break toward the
// lower client id.
domain::SelectionMask mab_select(const BanditState& state, const fitness::FitnessEvaluator& eval,
                                 const MabConfig& cfg, int round = 0);

struct GaResult {
    domain::SelectionMask mask;
    double fitness = 0.0;
    std::vector<double> trace;  // best-so-far per generation (elitist, non-increasing)
};

// Binary-chromosome GA: tournament selection, single-point crossover,
// independent bit-flip mutation, elitism of one.
GaResult ga_select(const fitness::FitnessEvaluator& eval, const GaConfig& cfg, int round = 0);

// Uniformly random k-subset of the n clients.
domain::SelectionMask random_select(std::size_t n, int k, std::uint64_t seed, int round = 0);

}  // namespace otafl::baselines

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "otafl/domain.hpp"
#include "otafl/fitness.hpp"
#include "otafl/rng.hpp"

namespace otafl::gwo {

struct GwoConfig {
    int population_size = 20;
    int max_iter = 50;
    double decode_threshold = 0.5;
    // Leader mixing weights (alpha, beta, delta); must be non-negative and sum
    // to 1 within 1e-9.
    std::array<double, 3> wolf_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::uint64_t seed = 1;

    // population_size >= 4 so alpha/beta/delta plus at least one omega exist.
    bool valid() const;
};

struct Leader {
    std::vector<double> pos;
    double fitness = 0.0;
};

// Population state exposed to iteration observers.
struct WolfPopulation {
    std::vector<std::vector<double>> positions;  // S rows in [0,1]^n
    std::vector<double> fitnesses;
    Leader alpha, beta, delta;  // best-so-far records, alpha <= beta <= delta
    int iteration = 0;
};

// Per-iteration diagnostics for the mechanics property tests.
struct IterationStats {
    int iteration = 0;
    double a = 0.0;      // decay coefficient used for this iteration's updates
    double A_min = 0.0;  // extreme sampled A components this iteration
    double A_max = 0.0;
    double best_fitness = 0.0;
};

using IterationObserver = std::function<void(const WolfPopulation&)>;

// Linear decay a = 2 - t * 2 / max_iter; iterations pass t = 0..max_iter-1 so
// the first update round uses exactly 2.
double coefficient_a(int t, int max_iter);

// One leader's per-dimension coefficient vectors: A = 2a*r1 - a, C = 2*r2.
// Draw order is fixed as r1 then r2 for each dimension in turn, so a stream
// consumed here is reproducible independent of scheduling.
struct Coefficients {
    std::vector<double> A, C;
};
Coefficients coefficients_AC(double a, std::size_t dim, Rng& rng);

// Distance-and-move step toward each leader, averaged with wolf_weights, then
// clamped to [0,1] per component:
//   d_k = |C_k o X_k - x|,  X_k' = X_k - A_k o d_k,  result = sum w_k * X_k'.
std::vector<double> leader_guided_update(const std::vector<double>& x,
                                         const std::vector<double>& alpha,
                                         const std::vector<double>& beta,
                                         const std::vector<double>& delta,
                                         const std::array<Coefficients, 3>& coeffs,
                                         const std::array<double, 3>& wolf_weights);

// Position component > threshold selects the client; exact ties decode to 0.
domain::SelectionMask decode(const std::vector<double>& position, double threshold = 0.5,
                             int round = 0);

struct GwoResult {
    domain::SelectionMask mask;
    double fitness = 0.0;
    std::vector<double> trace;  // best-so-far fitness: initial + one per iteration
    std::vector<IterationStats> stats;
    bool feasible = false;  // false when even the best decoded mask violates constraints
};

// Runs the full selection loop against a per-round evaluator. Each wolf draws
// from its own stream derived from (cfg.seed, wolf index), so results do not
// depend on evaluation order.
GwoResult optimize(const fitness::FitnessEvaluator& eval, const GwoConfig& cfg, int round = 0,
                   const IterationObserver& observer = {});

GwoResult optimize(const std::vector<domain::ClientProfile>& fleet,
                   const domain::SystemConfig& sys, const domain::SelectionHistory& hist,
                   const fitness::FitnessWeights& weights, const GwoConfig& cfg, int round = 0);

// Internal hook for continuous benchmark objectives over [0,1]^dim; exercises
// the identical loop without binary decoding. Not part of the selection API.
struct ContinuousResult {
    std::vector<double> best;
    double fitness = 0.0;
    std::vector<double> trace;
};
ContinuousResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                          std::size_t dim, const GwoConfig& cfg);

}  // namespace otafl::gwo

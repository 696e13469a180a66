#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otafl/domain.hpp"
#include "otafl/fitness.hpp"
#include "otafl/learner.hpp"
#include "otafl/rng.hpp"

namespace otafl::fl_sim {

// Selector plug-in for the round loop. select() proposes a mask for the
// round; the loop projects it onto the feasible set before training (see
// enforce_constraints). feedback() fires after every completed round with the
// trained mask and the raw held-out accuracy gain — bandit selectors learn
// from it, others ignore it. last_trace() exposes the most recent internal
// convergence trace (GWO/GA) for export.
class SelectorDriver {
public:
    virtual ~SelectorDriver() = default;
    virtual domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) = 0;
    virtual void feedback(const domain::SelectionMask& mask, double accuracy_gain);
    virtual std::vector<double> last_trace() const;
    // One inner-convergence trace per select() call, in call order; empty for
    // selectors without an iterative inner loop.
    virtual std::vector<std::vector<double>> all_traces() const;
    virtual std::string name() const = 0;
};

// Mutable experiment state threaded through run_round: the driver is the
// single writer of the global model, the fleet's historical_loss fields, and
// the selection history.
struct SimState {
    std::vector<domain::ClientProfile> fleet;
    domain::SystemConfig sys;
    fitness::FitnessWeights weights;
    TrainerConfig trainer;
    GlobalModel model;
    std::vector<LocalDataset> client_data;  // one per fleet entry
    LocalDataset test_data;                 // held-out evaluation split
    domain::SelectionHistory hist;
    int round = 0;
};

// Contiguous sample range [begin, end) of a dataset as a new dataset (labels
// cycle through the classes in generation order, so head/tail slices stay
// class-balanced).
LocalDataset slice(const LocalDataset& src, std::size_t begin, std::size_t end);

// Weighted sum of the completers' updates, weights renormalized to sum 1.
// When snr_db is set and finite, adds zero-mean Gaussian noise per coordinate
// with variance = (mean square of the aggregated signal) * 10^(-snr_db/10);
// an infinite snr_db sentinel is exactly noiseless. Throws on empty input,
// mismatched dimensions, or non-positive weight sum.
std::vector<double> ota_aggregate(const std::vector<std::vector<double>>& updates,
                                  std::vector<double> weights, std::optional<double> snr_db,
                                  Rng* noise_rng = nullptr);

// Independent per-client failure draws: selected client i fails with
// probability 1 - rho_i evaluated at tau_c + tau_t. Streams derive from
// (master_seed, mask.round, i), so parallel schedules cannot change results.
// Returns failed client ids, ascending.
std::vector<int> inject_failures(const domain::SelectionMask& mask,
                                 const std::vector<domain::ClientProfile>& fleet,
                                 const domain::SystemConfig& cfg, std::uint64_t master_seed);

// Projects a proposed mask onto the feasible set of Eq.-11-style constraints:
// drops clients failing their per-client hard constraints, adds eligible
// clients whose fairness quota would otherwise become unreachable, then
// sheds bandwidth overflow by dropping the widest non-forced clients first.
// Selectors that are constraint-blind (random, bandit) stay honest through
// this projection; fitness-guided selectors are typically already feasible.
domain::SelectionMask enforce_constraints(const domain::SelectionMask& proposal,
                                          const fitness::FitnessEvaluator& eval);

// One Algorithm-1 round in the configured timing mode.
//   SelectThenTrain: select -> enforce -> only selected train -> failures ->
//     OTA aggregate -> held-out evaluation.
//   TrainThenSelect: ALL clients train (and spend compute energy), selection
//     runs on the fresh losses, only selected completers aggregate.
// round_delay = max over trained clients of tau_c + tau_t; round_energy sums
// e_c over trained clients plus e_t over completers. A round with no
// completers (or an empty enforced mask) leaves the model unchanged and is
// flagged aborted. Selection history always advances by one round.
domain::RoundRecord run_round(SimState& state, SelectorDriver& driver);

struct ExperimentResult {
    std::vector<domain::RoundRecord> records;
    // Empty on success; on a round error, holds the message and records stop
    // at the last completed round.
    std::string error;

    bool ok() const { return error.empty(); }
};

// Runs `rounds` rounds (<= 0 means sys.total_rounds), feeding each round's
// accuracy gain back to the driver. State is left at the final round, so the
// caller owns the evolved fleet, history, and model.
ExperimentResult run_experiment(SimState& state, SelectorDriver& driver, int rounds = -1);

}  // namespace otafl::fl_sim

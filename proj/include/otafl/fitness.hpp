#pragma once

#include <cstddef>
#include <vector>

#include "otafl/cost_model.hpp"
#include "otafl/domain.hpp"

namespace otafl::fitness {

// Scalarization weights for the five selection attributes. The weighted sum of
// the (all in [0,1]) attribute terms is at most 1, so penalty_coeff strictly
// dominates any unpenalized fitness difference.
struct FitnessWeights {
    double loss = 0.40;
    double delay = 0.15;
    double energy = 0.15;
    double reliability = 0.15;
    double fairness = 0.15;
    double penalty_coeff = 1e6;

    double sum() const { return loss + delay + energy + reliability + fairness; }
    // Weights must sum to 1 within 1e-9 and be non-negative.
    bool valid() const;
};

// One constraint's outcome. margin >= 0 when satisfied; the most negative
// per-client slack when violated. Vacuous checks (empty selection) report
// ok with margin +infinity.
struct ConstraintCheck {
    bool ok = true;
    double margin = 0.0;
};

// Per-constraint verdicts for one mask. The mask is feasible iff every check
// passes and the selection is non-empty (empty rounds are never trained).
struct FeasibilityReport {
    ConstraintCheck delay;        // completion time within each selected client's budget
    ConstraintCheck energy;       // 0 < round energy <= each selected client's budget
    ConstraintCheck reliability;  // selected rho_i >= system min_reliability
    ConstraintCheck fairness;     // look-ahead: every client's quota stays reachable
    ConstraintCheck accuracy;     // min_accuracy <= epsilon_i <= 1 for selected
    ConstraintCheck cpu_cap;      // 0 < f_i <= f_i^max for selected
    ConstraintCheck power_cap;    // 0 <= p_i <= p_i^max for selected
    ConstraintCheck bandwidth;    // sum of selected b_i <= total_bandwidth
    bool non_empty = false;

    bool feasible() const;
    // Number of violated checks, counting an empty selection as one violation.
    // Multiplied by penalty_coeff in the fitness value.
    int violation_count() const;
};

// Precomputes per-client costs and the per-round normalization baselines over
// the full fleet, then scores masks cheaply. Population selectors (GWO, GA)
// and exhaustive enumeration all share one evaluator per round so every mask
// is scored against identical baselines.
//
// Attribute terms, each in [0,1]:
//   L-hat   data-weighted mean over selected of min-max-normalized historical loss
//   T-hat   min-max-normalized (over per-client values) max selected total delay
//   E-hat   sum of selected total energies / sum over the whole fleet
//   R-hat   mean selected reliability (already a probability; used raw)
//   Phi-hat mean over all clients of max(0, c_i - fraction_i), where the
//           fraction counts the candidate round: (counts_i + bit_i)/(rounds+1),
//           so the shortfall term can steer the current selection
// Non-finite per-client delay/energy (zero-rate radios) are clamped to the
// largest finite fleet value for the soft terms; the hard constraints still
// see the infinities and flag the client infeasible.
class FitnessEvaluator {
public:
    FitnessEvaluator(const std::vector<domain::ClientProfile>& fleet,
                     const domain::SystemConfig& cfg,
                     const domain::SelectionHistory& hist,
                     FitnessWeights weights = {});

    double value(const domain::SelectionMask& mask) const;
    FeasibilityReport feasibility(const domain::SelectionMask& mask) const;

    // Per-client hard constraints only (delay, energy, reliability, accuracy,
    // cpu and power caps) — the subset-independent part of feasibility, used
    // to pre-filter candidates.
    bool client_hard_ok(std::size_t i) const { return hard_ok_[i]; }

    // Clients whose fairness quota becomes unreachable if they are excluded
    // from the current round (the hard half of the fairness constraint).
    const std::vector<int>& forced_clients() const { return forced_; }

    const cost::CostBreakdown& breakdown(std::size_t i) const { return costs_[i]; }
    double normalized_loss(std::size_t i) const { return norm_loss_[i]; }
    const domain::ClientProfile& profile(std::size_t i) const { return (*fleet_)[i]; }
    double total_bandwidth() const { return cfg_->total_bandwidth; }
    std::size_t fleet_size() const { return fleet_->size(); }
    const FitnessWeights& weights() const { return weights_; }

private:
    const std::vector<domain::ClientProfile>* fleet_;
    const domain::SystemConfig* cfg_;
    const domain::SelectionHistory* hist_;
    FitnessWeights weights_;

    std::vector<cost::CostBreakdown> costs_;
    std::vector<double> soft_delay_;   // finite-clamped total delays
    std::vector<double> soft_energy_;  // finite-clamped total energies
    std::vector<double> norm_loss_;    // min-max-normalized historical losses
    std::vector<bool> hard_ok_;
    std::vector<int> forced_;
    double delay_min_ = 0.0, delay_range_ = 0.0;
    double energy_total_ = 0.0;
};

// Convenience wrappers constructing a single-use evaluator.
FeasibilityReport feasibility(const domain::SelectionMask& mask,
                              const std::vector<domain::ClientProfile>& fleet,
                              const domain::SystemConfig& cfg,
                              const domain::SelectionHistory& hist);

double fitness_value(const domain::SelectionMask& mask,
                     const std::vector<domain::ClientProfile>& fleet,
                     const domain::SystemConfig& cfg,
                     const domain::SelectionHistory& hist,
                     FitnessWeights weights = {});

}  // namespace otafl::fitness

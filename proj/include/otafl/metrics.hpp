#pragma once

#include <vector>

#include "otafl/domain.hpp"

namespace otafl::metrics {

// Accuracy is carried in percent throughout this module so the efficiency
// indicators come out in %/joule.
struct ExperimentSummary {
    double final_accuracy_pct = 0.0;
    double final_loss = 0.0;
    double convergence_time_s = 0.0;  // simulated seconds (sum of round delays)
    int convergence_round = -1;       // -1 when never converged
    bool converged = false;
    double total_energy_j = 0.0;
    double gee = 0.0;                  // final_accuracy_pct / total_energy_j
    std::vector<double> iee;           // per-round series; NaN where energy <= 0
    double avg_reliability = 0.0;      // mean over rounds of mean selected rho
    double worst_reliability = 0.0;    // min selected rho across the horizon
    double avg_fairness = 0.0;         // mean final selection fraction
    double worst_fairness = 0.0;       // min final selection fraction
    double mean_selected_fitness = 0.0;
    double mean_selected_count = 0.0;
    int total_failures = 0;
    int aborted_rounds = 0;
};

// accuracy_pct / energy_j; NaN marker when energy_j <= 0 (undefined point in
// the series), 0 when accuracy is 0.
double instantaneous_ee(double accuracy_pct, double energy_j);

// final_accuracy_pct / sum(per_round_energy); NaN when the sum is <= 0.
double global_ee(double final_accuracy_pct, const std::vector<double>& per_round_energy);

struct ConvergenceParams {
    double epsilon = 1e-3;  // loss-delta threshold
    int window = 5;         // trailing rounds that must all move less than epsilon
};

struct ConvergenceResult {
    double time_s = 0.0;  // sum of round delays up to detection (or the full horizon)
    int round = -1;       // detection round index; -1 when never converged
    bool converged = false;
};

// First round r (r >= window) where every loss delta in the trailing window
// is below epsilon; time is the sum of round_delay through r. When no such
// round exists the full-horizon delay sum is returned flagged unconverged.
ConvergenceResult convergence_time(const std::vector<domain::RoundRecord>& records,
                                   double epsilon, int window);

// Folds a finished run into the summary table row. Reliability statistics
// are computed over the selected clients' rho values round by round;
// fairness statistics come from the final SelectionHistory.
ExperimentSummary summarize(const std::vector<domain::RoundRecord>& records,
                            const std::vector<domain::ClientProfile>& fleet,
                            const domain::SystemConfig& sys, const domain::SelectionHistory& hist,
                            const ConvergenceParams& params = {});

}  // namespace otafl::metrics

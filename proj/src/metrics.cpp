#include "otafl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "otafl/cost_model.hpp"

namespace otafl::metrics {

double instantaneous_ee(double accuracy_pct, double energy_j) {
    if (energy_j <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return accuracy_pct / energy_j;
}

double global_ee(double final_accuracy_pct, const std::vector<double>& per_round_energy) {
    double total = 0.0;
    for (double e : per_round_energy) total += e;
    if (total <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return final_accuracy_pct / total;
}

ConvergenceResult convergence_time(const std::vector<domain::RoundRecord>& records,
                                   double epsilon, int window) {
    if (window < 1) throw std::invalid_argument("convergence_time: window must be >= 1");
    ConvergenceResult res;
    double elapsed = 0.0;
    for (std::size_t r = 0; r < records.size(); ++r) {
        elapsed += records[r].round_delay;
        if (r < static_cast<std::size_t>(window)) continue;
        double worst_delta = 0.0;
        for (std::size_t t = r + 1 - static_cast<std::size_t>(window); t <= r; ++t)
            worst_delta = std::max(worst_delta,
                                   std::fabs(records[t].global_loss - records[t - 1].global_loss));
        if (worst_delta < epsilon) {
            res.converged = true;
            res.round = static_cast<int>(r);
            res.time_s = elapsed;
            return res;
        }
    }
    res.time_s = elapsed;  // full horizon, flagged unconverged
    return res;
}

ExperimentSummary summarize(const std::vector<domain::RoundRecord>& records,
                            const std::vector<domain::ClientProfile>& fleet,
                            const domain::SystemConfig& sys, const domain::SelectionHistory& hist,
                            const ConvergenceParams& params) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    ExperimentSummary s;
    s.final_accuracy_pct = records.back().global_accuracy * 100.0;
    s.final_loss = records.back().global_loss;

    std::vector<double> rho(fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i)
        rho[i] = cost::evaluate(fleet[i], sys).reliability;

    double round_rho_sum = 0.0;
    int rounds_with_selection = 0;
    s.worst_reliability = std::numeric_limits<double>::infinity();
    for (const auto& rec : records) {
        s.total_energy_j += rec.round_energy;
        s.iee.push_back(instantaneous_ee(rec.global_accuracy * 100.0, rec.round_energy));
        s.mean_selected_fitness += rec.selected_fitness;
        s.mean_selected_count += rec.mask.count();
        s.total_failures += static_cast<int>(rec.failures.size());
        if (rec.aborted) ++s.aborted_rounds;
        double mask_rho = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < rec.mask.size(); ++i) {
            if (!rec.mask.selected(i)) continue;
            mask_rho += rho[i];
            s.worst_reliability = std::min(s.worst_reliability, rho[i]);
            ++cnt;
        }
        if (cnt > 0) {
            round_rho_sum += mask_rho / cnt;
            ++rounds_with_selection;
        }
    }
    const double nrec = static_cast<double>(records.size());
    s.mean_selected_fitness /= nrec;
    s.mean_selected_count /= nrec;
    s.avg_reliability = rounds_with_selection > 0 ? round_rho_sum / rounds_with_selection : 0.0;
    if (!std::isfinite(s.worst_reliability)) s.worst_reliability = 0.0;

    if (hist.rounds_elapsed > 0 && !hist.counts.empty()) {
        s.worst_fairness = std::numeric_limits<double>::infinity();
        for (std::int64_t c : hist.counts) {
            const double frac = static_cast<double>(c) / hist.rounds_elapsed;
            s.avg_fairness += frac;
            s.worst_fairness = std::min(s.worst_fairness, frac);
        }
        s.avg_fairness /= static_cast<double>(hist.counts.size());
    }

    const ConvergenceResult conv = convergence_time(records, params.epsilon, params.window);
    s.convergence_time_s = conv.time_s;
    s.convergence_round = conv.round;
    s.converged = conv.converged;

    std::vector<double> energies;
    energies.reserve(records.size());
    for (const auto& rec : records) energies.push_back(rec.round_energy);
    s.gee = global_ee(s.final_accuracy_pct, energies);
    return s;
}

}  // namespace otafl::metrics

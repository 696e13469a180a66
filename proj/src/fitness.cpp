#include "otafl/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otafl::fitness {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Tolerance for the fairness reachability comparison: c_i * T is a float
// product compared against integer round counts.
constexpr double kQuotaEps = 1e-9;
}  // namespace

bool FitnessWeights::valid() const {
    if (loss < 0.0 || delay < 0.0 || energy < 0.0 || reliability < 0.0 || fairness < 0.0)
        return false;
    return std::abs(sum() - 1.0) <= 1e-9 && penalty_coeff > 0.0;
}

bool FeasibilityReport::feasible() const {
    return non_empty && delay.ok && energy.ok && reliability.ok && fairness.ok &&
           accuracy.ok && cpu_cap.ok && power_cap.ok && bandwidth.ok;
}

int FeasibilityReport::violation_count() const {
    int v = 0;
    for (const ConstraintCheck* c :
         {&delay, &energy, &reliability, &fairness, &accuracy, &cpu_cap, &power_cap, &bandwidth})
        if (!c->ok) ++v;
    if (!non_empty) ++v;
    return v;
}

FitnessEvaluator::FitnessEvaluator(const std::vector<domain::ClientProfile>& fleet,
                                   const domain::SystemConfig& cfg,
                                   const domain::SelectionHistory& hist,
                                   FitnessWeights weights)
    : fleet_(&fleet), cfg_(&cfg), hist_(&hist), weights_(weights) {
    if (!weights_.valid()) throw std::invalid_argument("fitness weights must be >= 0 and sum to 1");
    if (hist.counts.size() != fleet.size())
        throw std::invalid_argument("selection history size does not match fleet size");

    const std::size_t n = fleet.size();
    costs_.reserve(n);
    for (const auto& p : fleet) costs_.push_back(cost::evaluate(p, cfg));

    // Finite-clamped copies of delay/energy for the soft terms.
    double max_fin_delay = 0.0, max_fin_energy = 0.0;
    for (const auto& c : costs_) {
        if (std::isfinite(c.total_delay())) max_fin_delay = std::max(max_fin_delay, c.total_delay());
        if (std::isfinite(c.total_energy()))
            max_fin_energy = std::max(max_fin_energy, c.total_energy());
    }
    soft_delay_.resize(n);
    soft_energy_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        soft_delay_[i] =
            std::isfinite(costs_[i].total_delay()) ? costs_[i].total_delay() : max_fin_delay;
        soft_energy_[i] =
            std::isfinite(costs_[i].total_energy()) ? costs_[i].total_energy() : max_fin_energy;
        energy_total_ += soft_energy_[i];
    }
    const auto [dmin, dmax] = std::minmax_element(soft_delay_.begin(), soft_delay_.end());
    delay_min_ = n ? *dmin : 0.0;
    delay_range_ = n ? *dmax - *dmin : 0.0;

    double lmin = kInf, lmax = -kInf;
    for (const auto& p : fleet) {
        lmin = std::min(lmin, p.historical_loss);
        lmax = std::max(lmax, p.historical_loss);
    }
    norm_loss_.resize(n, 0.0);
    if (lmax - lmin > 0.0)
        for (std::size_t i = 0; i < n; ++i)
            norm_loss_[i] = (fleet[i].historical_loss - lmin) / (lmax - lmin);

    hard_ok_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = fleet[i];
        const auto& c = costs_[i];
        const double e = c.total_energy();
        hard_ok_[i] = c.total_delay() <= p.delay_budget && e > 0.0 && e <= p.energy_budget &&
                      c.reliability >= cfg.min_reliability &&
                      p.target_accuracy >= cfg.min_accuracy && p.target_accuracy <= 1.0 &&
                      p.cpu_freq > 0.0 && p.cpu_freq <= p.cpu_freq_max && p.tx_power >= 0.0 &&
                      p.tx_power <= p.tx_power_max;
    }

    // Fairness reachability: a client is forced into the current round when
    // skipping it would leave its c_i * T quota unreachable while selecting it
    // still meets the quota.  Quotas unreachable either way are sunk: no
    // current decision can change them, so they force nothing.
    const double remaining_after =
        std::max(0, cfg.total_rounds - hist.rounds_elapsed - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double quota = fleet[i].min_selection_fraction * cfg.total_rounds;
        const double counts = static_cast<double>(hist.counts[i]);
        if (counts + remaining_after < quota - kQuotaEps &&
            counts + 1.0 + remaining_after >= quota - kQuotaEps)
            forced_.push_back(static_cast<int>(i));
    }
}

FeasibilityReport FitnessEvaluator::feasibility(const domain::SelectionMask& mask) const {
    if (mask.size() != fleet_->size())
        throw std::invalid_argument("mask length does not match fleet size");
    FeasibilityReport r;
    r.non_empty = !mask.empty_mask();

    // Per-selected-client checks accumulate the worst margin.
    for (ConstraintCheck* c :
         {&r.delay, &r.energy, &r.reliability, &r.accuracy, &r.cpu_cap, &r.power_cap})
        c->margin = kInf;
    double band_sum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.selected(i)) continue;
        const auto& p = (*fleet_)[i];
        const auto& c = costs_[i];

        r.delay.margin = std::min(r.delay.margin, p.delay_budget - c.total_delay());
        if (c.total_delay() > p.delay_budget) r.delay.ok = false;

        const double e = c.total_energy();
        r.energy.margin = std::min(r.energy.margin, std::min(e, p.energy_budget - e));
        if (!(e > 0.0) || e > p.energy_budget) r.energy.ok = false;

        r.reliability.margin = std::min(r.reliability.margin, c.reliability - cfg_->min_reliability);
        if (c.reliability < cfg_->min_reliability) r.reliability.ok = false;

        r.accuracy.margin = std::min(
            r.accuracy.margin,
            std::min(p.target_accuracy - cfg_->min_accuracy, 1.0 - p.target_accuracy));
        if (p.target_accuracy < cfg_->min_accuracy || p.target_accuracy > 1.0)
            r.accuracy.ok = false;

        r.cpu_cap.margin = std::min(r.cpu_cap.margin, std::min(p.cpu_freq_max - p.cpu_freq, p.cpu_freq));
        if (!(p.cpu_freq > 0.0) || p.cpu_freq > p.cpu_freq_max) r.cpu_cap.ok = false;

        r.power_cap.margin =
            std::min(r.power_cap.margin, std::min(p.tx_power_max - p.tx_power, p.tx_power));
        if (p.tx_power < 0.0 || p.tx_power > p.tx_power_max) r.power_cap.ok = false;

        band_sum += p.bandwidth;
    }
    r.bandwidth.margin = cfg_->total_bandwidth - band_sum;
    r.bandwidth.ok = band_sum <= cfg_->total_bandwidth;

    // Fleet-wide fairness look-ahead: slack of the most-at-risk client's best
    // achievable final fraction, in fraction-of-horizon units.  Clients whose
    // quota is unreachable even if selected now are sunk by past rounds, not
    // by this mask; counting them would penalize every candidate equally, so
    // they are excluded from the check.
    const double T = cfg_->total_rounds;
    const double remaining_after = std::max(0, cfg_->total_rounds - hist_->rounds_elapsed - 1);
    r.fairness.margin = kInf;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double counts = static_cast<double>(hist_->counts[i]);
        const double quota = (*fleet_)[i].min_selection_fraction * T;
        if (counts + 1.0 + remaining_after < quota - kQuotaEps) continue;
        const double best_final = counts + (mask.selected(i) ? 1.0 : 0.0) + remaining_after;
        r.fairness.margin = std::min(r.fairness.margin, (best_final - quota) / T);
        if (best_final < quota - kQuotaEps) r.fairness.ok = false;
    }
    return r;
}

double FitnessEvaluator::value(const domain::SelectionMask& mask) const {
    const FeasibilityReport rep = feasibility(mask);
    const std::size_t n = fleet_->size();

    double l_hat = 0.0, t_hat = 0.0, e_hat = 0.0, r_hat = 1.0;
    if (rep.non_empty) {
        double d_sel = 0.0, max_delay = -kInf, e_sum = 0.0, rho_sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask.selected(i)) continue;
            d_sel += static_cast<double>((*fleet_)[i].data_size);
            max_delay = std::max(max_delay, soft_delay_[i]);
            e_sum += soft_energy_[i];
            rho_sum += costs_[i].reliability;
            ++count;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (mask.selected(i))
                l_hat += (static_cast<double>((*fleet_)[i].data_size) / d_sel) * norm_loss_[i];
        if (delay_range_ > 0.0)
            t_hat = std::clamp((max_delay - delay_min_) / delay_range_, 0.0, 1.0);
        if (energy_total_ > 0.0) e_hat = e_sum / energy_total_;
        r_hat = rho_sum / count;
    }

    // Shortfall below the fairness quota, with the candidate round counted, so
    // the term distinguishes masks within the round.
    double phi_hat = 0.0;
    const double rounds_inc = hist_->rounds_elapsed + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double frac =
            (static_cast<double>(hist_->counts[i]) + (mask.selected(i) ? 1.0 : 0.0)) / rounds_inc;
        phi_hat += std::max(0.0, (*fleet_)[i].min_selection_fraction - frac);
    }
    phi_hat /= static_cast<double>(n);

    return weights_.loss * l_hat + weights_.delay * t_hat + weights_.energy * e_hat +
           weights_.reliability * (1.0 - r_hat) + weights_.fairness * phi_hat +
           weights_.penalty_coeff * rep.violation_count();
}

FeasibilityReport feasibility(const domain::SelectionMask& mask,
                              const std::vector<domain::ClientProfile>& fleet,
                              const domain::SystemConfig& cfg,
                              const domain::SelectionHistory& hist) {
    return FitnessEvaluator(fleet, cfg, hist).feasibility(mask);
}

double fitness_value(const domain::SelectionMask& mask,
                     const std::vector<domain::ClientProfile>& fleet,
                     const domain::SystemConfig& cfg, const domain::SelectionHistory& hist,
                     FitnessWeights weights) {
    return FitnessEvaluator(fleet, cfg, hist, weights).value(mask);
}

}  // namespace otafl::fitness

#pragma once

#include "otafl/domain.hpp"

namespace otafl::cost {

// Closed-form per-client wireless/compute costs. mtbf and the delay/energy
// fields may be +infinity (rate 0 or zero failures); reliability is always a
// probability.
struct CostBreakdown {
    double comp_delay = 0.0;   // s
    double tx_rate = 0.0;      // bit/s
    double tx_delay = 0.0;     // s
    double comp_energy = 0.0;  // J
    double tx_energy = 0.0;    // J
    double mtbf = 0.0;         // s, +inf when failure_count == 0
    double reliability = 1.0;  // in [0,1]

    double total_delay() const { return comp_delay + tx_delay; }
    double total_energy() const { return comp_energy + tx_energy; }
};

// Local computation time: (C_i * D_i / f_i) * upsilon_i * log2(1/epsilon_i).
// Throws std::domain_error when target_accuracy <= 0.
double computation_delay(const domain::ClientProfile& p);

// Achievable uplink rate: b_i * log2(1 + g_i * p_i / (N0 * b_i)).
double transmission_rate(const domain::ClientProfile& p, const domain::SystemConfig& cfg);

// Upload time for model_size_bits at the given rate; +inf when rate == 0 and
// the model is non-empty (the fitness layer treats that as a violation).
double transmission_delay(double model_size_bits, double rate);

// Local training energy: zeta_i * f_i^2 * C_i * D_i * upsilon_i * log2(1/epsilon_i).
double computation_energy(const domain::ClientProfile& p);

// Upload energy: p_i * model_size_bits / rate (propagates the rate-0 policy).
double transmission_energy(const domain::ClientProfile& p, const domain::SystemConfig& cfg);

// Mean time between failures: comp_delay / failures; +inf when failures == 0.
double mtbf(double comp_delay, int failures);

// Probability of operating without failure for duration t: exp(-t / mtbf).
double reliability(double t, double mtbf_value);

// Empirical selected fraction counts[i] / rounds_elapsed.
// Throws std::invalid_argument when rounds_elapsed == 0; callers treat
// fairness as vacuously satisfied before the first round.
double fairness_fraction(const domain::SelectionHistory& hist, int client_id);

// All costs for one client; reliability is evaluated over the window the
// client must survive, t = comp_delay + tx_delay.
CostBreakdown evaluate(const domain::ClientProfile& p, const domain::SystemConfig& cfg);

}  // namespace otafl::cost

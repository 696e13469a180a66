#include "otafl/cost_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace otafl::cost {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double local_iterations(const domain::ClientProfile& p) {
    if (p.target_accuracy <= 0.0)
        throw std::domain_error("target_accuracy must be in (0, 1]");
    return p.iteration_factor * std::log2(1.0 / p.target_accuracy);
}
}  // namespace

double computation_delay(const domain::ClientProfile& p) {
    return (p.cycles_per_sample * static_cast<double>(p.data_size) / p.cpu_freq) *
           local_iterations(p);
}

double transmission_rate(const domain::ClientProfile& p, const domain::SystemConfig& cfg) {
    const double snr = p.channel_gain * p.tx_power / (cfg.noise_psd * p.bandwidth);
    return p.bandwidth * std::log2(1.0 + snr);
}

double transmission_delay(double model_size_bits, double rate) {
    if (rate <= 0.0) return model_size_bits > 0.0 ? kInf : 0.0;
    return model_size_bits / rate;
}

double computation_energy(const domain::ClientProfile& p) {
    return p.energy_coeff * p.cpu_freq * p.cpu_freq * p.cycles_per_sample *
           static_cast<double>(p.data_size) * local_iterations(p);
}

double transmission_energy(const domain::ClientProfile& p, const domain::SystemConfig& cfg) {
    const double rate = transmission_rate(p, cfg);
    if (rate <= 0.0) {
        // p = 0 implies rate = 0 and no energy is spent; otherwise the client
        // cannot finish the upload and the cost is unbounded.
        return p.tx_power > 0.0 && cfg.model_size_bits > 0.0 ? kInf : 0.0;
    }
    return p.tx_power * cfg.model_size_bits / rate;
}

double mtbf(double comp_delay, int failures) {
    if (failures <= 0) return kInf;
    return comp_delay / static_cast<double>(failures);
}

double reliability(double t, double mtbf_value) {
    if (t < 0.0) throw std::domain_error("reliability: t must be >= 0");
    if (std::isinf(mtbf_value) || t == 0.0) return 1.0;
    if (mtbf_value <= 0.0) return 0.0;
    return std::exp(-t / mtbf_value);
}

double fairness_fraction(const domain::SelectionHistory& hist, int client_id) {
    if (hist.rounds_elapsed < 1)
        throw std::invalid_argument("fairness_fraction undefined before the first round");
    return static_cast<double>(hist.counts.at(static_cast<std::size_t>(client_id))) /
           static_cast<double>(hist.rounds_elapsed);
}

CostBreakdown evaluate(const domain::ClientProfile& p, const domain::SystemConfig& cfg) {
    CostBreakdown b;
    b.comp_delay = computation_delay(p);
    b.tx_rate = transmission_rate(p, cfg);
    b.tx_delay = transmission_delay(cfg.model_size_bits, b.tx_rate);
    b.comp_energy = computation_energy(p);
    b.tx_energy = transmission_energy(p, cfg);
    b.mtbf = mtbf(b.comp_delay, p.failure_count);
    b.reliability = reliability(b.total_delay(), b.mtbf);
    return b;
}

}  // namespace otafl::cost

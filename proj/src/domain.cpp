#include "otafl/domain.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace otafl::domain {

int SelectionMask::count() const {
    int c = 0;
    for (auto b : bits) c += b != 0;
    return c;
}

std::vector<int> SelectionMask::selected_ids() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) ids.push_back(static_cast<int>(i));
    return ids;
}

void SelectionHistory::record(const SelectionMask& mask) {
    if (mask.size() != counts.size())
        throw std::invalid_argument("SelectionHistory::record: mask length != fleet size");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += mask.bits[i] ? 1 : 0;
    ++rounds_elapsed;
}

namespace {

void require(std::vector<std::string>& out, bool cond, int id, const std::string& msg) {
    if (!cond) {
        std::ostringstream os;
        os << "client " << id << ": " << msg;
        out.push_back(os.str());
    }
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::vector<std::string> validate_profile(const ClientProfile& p, const SystemConfig& cfg) {
    std::vector<std::string> v;
    require(v, p.data_size >= 1, p.id, "data_size must be >= 1");
    require(v, std::isfinite(p.cycles_per_sample) && p.cycles_per_sample > 0.0, p.id,
            "cycles_per_sample must be positive");
    require(v, std::isfinite(p.cpu_freq) && p.cpu_freq > 0.0, p.id, "cpu_freq must be positive");
    require(v, p.cpu_freq <= p.cpu_freq_max, p.id, "cpu_freq exceeds cpu_freq_max");
    require(v, std::isfinite(p.iteration_factor) && p.iteration_factor > 0.0, p.id,
            "iteration_factor must be positive");
    require(v, p.target_accuracy >= cfg.min_accuracy && p.target_accuracy <= 1.0, p.id,
            "target_accuracy outside [min_accuracy, 1]");
    require(v, finite_nonneg(p.energy_coeff), p.id, "energy_coeff must be non-negative");
    require(v, finite_nonneg(p.tx_power), p.id, "tx_power must be non-negative");
    require(v, p.tx_power <= p.tx_power_max, p.id, "tx_power exceeds tx_power_max");
    require(v, std::isfinite(p.bandwidth) && p.bandwidth > 0.0, p.id, "bandwidth must be positive");
    require(v, std::isfinite(p.channel_gain) && p.channel_gain > 0.0, p.id,
            "channel_gain must be positive");
    require(v, p.failure_count >= 0, p.id, "failure_count must be non-negative");
    require(v, finite_nonneg(p.delay_budget), p.id, "delay_budget must be non-negative");
    require(v, finite_nonneg(p.energy_budget), p.id, "energy_budget must be non-negative");
    require(v, p.min_selection_fraction >= 0.0 && p.min_selection_fraction <= 1.0, p.id,
            "min_selection_fraction outside [0, 1]");
    require(v, finite_nonneg(p.historical_loss), p.id, "historical_loss must be non-negative");
    return v;
}

ValidationReport validate_fleet(const std::vector<ClientProfile>& fleet, const SystemConfig& cfg) {
    ValidationReport report;
    if (!(cfg.total_bandwidth > 0.0)) report.errors.push_back("system: total_bandwidth must be positive");
    if (!(cfg.model_size_bits > 0.0)) report.errors.push_back("system: model_size_bits must be positive");
    if (!(cfg.min_reliability >= 0.0 && cfg.min_reliability <= 1.0))
        report.errors.push_back("system: min_reliability outside [0, 1]");
    if (!(cfg.min_accuracy > 0.0 && cfg.min_accuracy < 1.0))
        report.errors.push_back("system: min_accuracy outside (0, 1)");
    if (cfg.total_rounds < 1) report.errors.push_back("system: total_rounds must be >= 1");
    if (!(cfg.noise_psd > 0.0)) report.errors.push_back("system: noise_psd must be positive");

    for (std::size_t i = 0; i < fleet.size(); ++i) {
        if (fleet[i].id != static_cast<int>(i)) {
            std::ostringstream os;
            os << "client at index " << i << ": id " << fleet[i].id << " does not match index";
            report.errors.push_back(os.str());
        }
        auto v = validate_profile(fleet[i], cfg);
        report.errors.insert(report.errors.end(), v.begin(), v.end());
    }

    const double bw_sum = std::accumulate(fleet.begin(), fleet.end(), 0.0,
                                          [](double s, const ClientProfile& p) { return s + p.bandwidth; });
    if (bw_sum > cfg.total_bandwidth) {
        std::ostringstream os;
        os << "fleet bandwidth sum " << bw_sum << " Hz exceeds total_bandwidth " << cfg.total_bandwidth
           << " Hz; the all-clients mask is bandwidth-infeasible";
        report.warnings.push_back(os.str());
    }
    return report;
}

const char* to_string(SelectionTiming t) {
    return t == SelectionTiming::SelectThenTrain ? "select_then_train" : "train_then_select";
}

std::optional<SelectionTiming> timing_from_string(const std::string& s) {
    if (s == "select_then_train") return SelectionTiming::SelectThenTrain;
    if (s == "train_then_select") return SelectionTiming::TrainThenSelect;
    return std::nullopt;
}

}  // namespace otafl::domain

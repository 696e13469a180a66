#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace otafl::domain {

// Static per-client hardware, data and radio parameters. Treated as immutable
// during a round; the experiment driver owns the one mutable copy and updates
// historical_loss between rounds.
struct ClientProfile {
    int id = 0;
    std::int64_t data_size = 1;        // samples
    double cycles_per_sample = 0.0;    // CPU cycles per sample
    double cpu_freq = 0.0;             // cycles/s
    double cpu_freq_max = 0.0;         // cycles/s
    double iteration_factor = 1.0;     // local-iteration scale
    double target_accuracy = 0.5;      // in [min_accuracy, 1]
    double energy_coeff = 0.0;         // J*s^2/cycle^3
    double tx_power = 0.0;             // W
    double tx_power_max = 0.0;         // W
    double bandwidth = 0.0;            // Hz
    double channel_gain = 0.0;
    int failure_count = 0;             // failures per computation window
    double delay_budget = 0.0;         // s
    double energy_budget = 0.0;        // J
    double min_selection_fraction = 0.0;
    double historical_loss = 0.0;      // EMA of measured local losses
};

enum class SelectionTiming { SelectThenTrain, TrainThenSelect };

struct SystemConfig {
    double noise_psd = 1e-17;          // W/Hz
    double total_bandwidth = 1e7;      // Hz
    double model_size_bits = 1e6;
    double min_reliability = 0.0;      // rho
    double min_accuracy = 0.01;        // epsilon_min
    int total_rounds = 30;
    std::optional<double> ota_snr_db;  // absent => noiseless aggregation
    SelectionTiming selection_timing = SelectionTiming::SelectThenTrain;
    std::uint64_t master_seed = 1;
};

// Binary inclusion vector over the fleet for one round.
struct SelectionMask {
    std::vector<std::uint8_t> bits;
    int round = 0;

    SelectionMask() = default;
    SelectionMask(std::size_t n, int round_index) : bits(n, 0), round(round_index) {}

    std::size_t size() const { return bits.size(); }
    bool selected(std::size_t i) const { return bits[i] != 0; }
    int count() const;
    bool empty_mask() const { return count() == 0; }
    std::vector<int> selected_ids() const;
};

// Per-client selection counts over the elapsed horizon.
struct SelectionHistory {
    std::vector<std::int64_t> counts;
    int rounds_elapsed = 0;

    SelectionHistory() = default;
    explicit SelectionHistory(std::size_t n) : counts(n, 0) {}

    void record(const SelectionMask& mask);
};

// Measured outcome of a single round.
struct RoundRecord {
    int round = 0;
    SelectionMask mask;
    double global_loss = 0.0;
    double global_accuracy = 0.0;      // fraction in [0,1]
    double round_delay = 0.0;          // s
    double round_energy = 0.0;         // J
    std::vector<int> failures;         // subset of selected ids, ascending
    std::map<int, double> per_client_loss;
    double selected_fitness = 0.0;     // fitness of the trained mask at selection time
    bool aborted = false;              // no completer produced an update
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

// Field-level invariant checks for one profile against the system config.
std::vector<std::string> validate_profile(const ClientProfile& p, const SystemConfig& cfg);

// Fleet-wide validation report. Per-field violations become errors; the
// scenario-level sum(b_i) > B condition is reported as a warning because the
// fitness layer enforces it per selected subset.
ValidationReport validate_fleet(const std::vector<ClientProfile>& fleet, const SystemConfig& cfg);

const char* to_string(SelectionTiming t);
std::optional<SelectionTiming> timing_from_string(const std::string& s);

}  // namespace otafl::domain

#include "otafl/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "otafl/cost_model.hpp"

namespace otafl::fl_sim {

namespace {
constexpr std::uint64_t kTrainSeedTag = 0x7E41;
constexpr std::uint64_t kFailureTag = 0xFA11;
constexpr std::uint64_t kChannelNoiseTag = 0xA99;
}  // namespace

void SelectorDriver::feedback(const domain::SelectionMask&, double) {}

std::vector<double> SelectorDriver::last_trace() const { return {}; }

std::vector<std::vector<double>> SelectorDriver::all_traces() const { return {}; }

LocalDataset slice(const LocalDataset& src, std::size_t begin, std::size_t end) {
    if (begin > end || end > src.size()) throw std::out_of_range("slice: bad range");
    LocalDataset out;
    out.feature_dim = src.feature_dim;
    out.owner = src.owner;
    const std::size_t d = static_cast<std::size_t>(src.feature_dim);
    out.labels.assign(src.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      src.labels.begin() + static_cast<std::ptrdiff_t>(end));
    out.features.assign(src.features.begin() + static_cast<std::ptrdiff_t>(begin * d),
                        src.features.begin() + static_cast<std::ptrdiff_t>(end * d));
    return out;
}

std::vector<double> ota_aggregate(const std::vector<std::vector<double>>& updates,
                                  std::vector<double> weights, std::optional<double> snr_db,
                                  Rng* noise_rng) {
    if (updates.empty()) throw std::invalid_argument("ota_aggregate: no completed clients");
    if (weights.size() != updates.size())
        throw std::invalid_argument("ota_aggregate: weight/update count mismatch");
    const std::size_t dim = updates.front().size();
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw std::invalid_argument("ota_aggregate: non-positive weight sum");
    for (double& w : weights) w /= wsum;

    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (updates[i].size() != dim)
            throw std::invalid_argument("ota_aggregate: update dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) out[j] += weights[i] * updates[i][j];
    }

    if (snr_db.has_value() && std::isfinite(*snr_db) && dim > 0) {
        double power = 0.0;
        for (double v : out) power += v * v;
        power /= static_cast<double>(dim);
        if (power > 0.0) {
            if (noise_rng == nullptr)
                throw std::invalid_argument("ota_aggregate: noisy channel needs an rng");
            const double sigma = std::sqrt(power * std::pow(10.0, -*snr_db / 10.0));
            for (double& v : out) v += sigma * noise_rng->normal();
        }
    }
    return out;
}

std::vector<int> inject_failures(const domain::SelectionMask& mask,
                                 const std::vector<domain::ClientProfile>& fleet,
                                 const domain::SystemConfig& cfg, std::uint64_t master_seed) {
    if (mask.size() != fleet.size())
        throw std::invalid_argument("inject_failures: mask/fleet size mismatch");
    std::vector<int> failed;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        if (!mask.selected(i)) continue;
        const double rho = cost::evaluate(fleet[i], cfg).reliability;
        if (rho >= 1.0) continue;  // m_i = 0: cannot fail, no draw consumed
        Rng rng(derive_seed(master_seed, {static_cast<std::uint64_t>(mask.round),
                                          static_cast<std::uint64_t>(i), kFailureTag}));
        if (rng.uniform() < 1.0 - rho) failed.push_back(fleet[i].id);
    }
    std::sort(failed.begin(), failed.end());
    return failed;
}

domain::SelectionMask enforce_constraints(const domain::SelectionMask& proposal,
                                          const fitness::FitnessEvaluator& eval) {
    const std::size_t n = eval.fleet_size();
    if (proposal.size() != n)
        throw std::invalid_argument("enforce_constraints: mask/fleet size mismatch");
    domain::SelectionMask mask(n, proposal.round);
    std::vector<char> forced(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        mask.bits[i] = (proposal.bits[i] != 0 && eval.client_hard_ok(i)) ? 1 : 0;
    for (int i : eval.forced_clients()) {
        const std::size_t idx = static_cast<std::size_t>(i);
        if (eval.client_hard_ok(idx)) {
            mask.bits[idx] = 1;
            forced[idx] = 1;
        }
    }

    double band = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (mask.bits[i]) band += eval.profile(i).bandwidth;
    while (band > eval.total_bandwidth()) {
        // Shed the widest client; keep fairness-forced clients as long as any
        // other candidate remains.
        std::size_t victim = n;
        bool victim_forced = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask.bits[i]) continue;
            const bool f = forced[i] != 0;
            const double b = eval.profile(i).bandwidth;
            if (victim == n || (!f && victim_forced) ||
                (f == victim_forced && b > eval.profile(victim).bandwidth)) {
                victim = i;
                victim_forced = f;
            }
        }
        if (victim == n) break;  // nothing selected
        mask.bits[victim] = 0;
        band -= eval.profile(victim).bandwidth;
    }
    return mask;
}

domain::RoundRecord run_round(SimState& state, SelectorDriver& driver) {
    const std::size_t n = state.fleet.size();
    if (state.client_data.size() != n)
        throw std::invalid_argument("run_round: client_data/fleet size mismatch");
    const int round = state.round;
    const bool train_first =
        state.sys.selection_timing == domain::SelectionTiming::TrainThenSelect;

    domain::RoundRecord rec;
    rec.round = round;

    std::vector<cost::CostBreakdown> costs(n);
    for (std::size_t i = 0; i < n; ++i) costs[i] = cost::evaluate(state.fleet[i], state.sys);

    std::vector<std::vector<double>> deltas(n);
    std::vector<char> trained(n, 0);
    auto train_client = [&](std::size_t i) {
        TrainerConfig tcfg = state.trainer;
        tcfg.seed = derive_seed(state.sys.master_seed,
                                {static_cast<std::uint64_t>(round),
                                 static_cast<std::uint64_t>(i), kTrainSeedTag});
        LocalTrainResult res =
            local_train(state.model, state.client_data[i], tcfg, &state.fleet[i]);
        deltas[i] = std::move(res.delta);
        rec.per_client_loss[state.fleet[i].id] = res.final_loss;
        trained[i] = 1;
    };

    domain::SelectionMask mask;
    if (train_first) {
        for (std::size_t i = 0; i < n; ++i) train_client(i);
        fitness::FitnessEvaluator eval(state.fleet, state.sys, state.hist, state.weights);
        mask = enforce_constraints(driver.select(eval, round), eval);
        mask.round = round;
        rec.selected_fitness = eval.value(mask);
    } else {
        fitness::FitnessEvaluator eval(state.fleet, state.sys, state.hist, state.weights);
        mask = enforce_constraints(driver.select(eval, round), eval);
        mask.round = round;
        rec.selected_fitness = eval.value(mask);
        for (std::size_t i = 0; i < n; ++i)
            if (mask.selected(i)) train_client(i);
    }
    rec.mask = mask;

    rec.failures = inject_failures(mask, state.fleet, state.sys, state.sys.master_seed);
    std::vector<char> failed(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (int id : rec.failures)
            if (state.fleet[i].id == id) failed[i] = 1;

    for (std::size_t i = 0; i < n; ++i) {
        if (!trained[i]) continue;
        rec.round_delay = std::max(rec.round_delay, costs[i].total_delay());
        rec.round_energy += costs[i].comp_energy;
        if (mask.selected(i) && !failed[i]) rec.round_energy += costs[i].tx_energy;
    }

    std::vector<std::vector<double>> updates;
    std::vector<double> weights;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.selected(i) || failed[i]) continue;
        updates.push_back(std::move(deltas[i]));
        weights.push_back(static_cast<double>(state.fleet[i].data_size));
    }
    if (updates.empty()) {
        rec.aborted = true;
    } else {
        Rng noise_rng(derive_seed(state.sys.master_seed,
                                  {static_cast<std::uint64_t>(round), kChannelNoiseTag}));
        const std::vector<double> agg =
            ota_aggregate(updates, std::move(weights), state.sys.ota_snr_db, &noise_rng);
        for (std::size_t j = 0; j < state.model.w.size(); ++j) state.model.w[j] += agg[j];
        state.model.version = round + 1;
    }

    const EvalResult ev = evaluate(state.model, state.test_data);
    rec.global_loss = ev.loss;
    rec.global_accuracy = ev.accuracy;

    state.hist.record(mask);
    ++state.round;
    return rec;
}

ExperimentResult run_experiment(SimState& state, SelectorDriver& driver, int rounds) {
    if (rounds <= 0) rounds = state.sys.total_rounds;
    ExperimentResult out;
    try {
        double prev_acc = evaluate(state.model, state.test_data).accuracy;
        for (int r = 0; r < rounds; ++r) {
            domain::RoundRecord rec = run_round(state, driver);
            driver.feedback(rec.mask, rec.global_accuracy - prev_acc);
            prev_acc = rec.global_accuracy;
            out.records.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace otafl::fl_sim

#include "otafl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "otafl/cost_model.hpp"
#include "otafl/rng.hpp"

namespace otafl::baselines {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void BanditState::update(const domain::SelectionMask& mask, double reward) {
    if (mask.size() != pulls.size())
        throw std::invalid_argument("bandit update: mask length does not match state");
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.selected(i)) continue;
        ++pulls[i];
        mean_reward[i] += (reward - mean_reward[i]) / static_cast<double>(pulls[i]);
    }
    ++total_rounds;
}

bool GaConfig::valid(std::size_t n) const {
    const double mut = mutation_rate < 0.0 ? 1.0 / static_cast<double>(n) : mutation_rate;
    return population >= 2 && population % 2 == 0 && generations >= 1 && crossover_rate >= 0.0 &&
           crossover_rate <= 1.0 && mut >= 0.0 && mut <= 1.0 && tournament >= 1;
}

domain::SelectionMask dp_select(const fitness::FitnessEvaluator& eval, const DpConfig& cfg,
                                int round) {
    const std::size_t n = eval.fleet_size();
    double capacity = cfg.capacity;
    if (capacity <= 0.0) {
        // Default: half the sum of per-client energy budgets (the budgets are
        // the e_i bounds of the selection problem, not the realized costs).
        double budget_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) budget_sum += eval.profile(i).energy_budget;
        capacity = 0.5 * budget_sum;
    }
    if (capacity <= 0.0 || cfg.bins < 1)
        throw std::invalid_argument("dp_select: capacity and bins must be positive");

    const double quantum = capacity / static_cast<double>(cfg.bins);
    struct Item {
        std::size_t client;
        int weight;
        double value;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < n; ++i) {
        if (!eval.client_hard_ok(i)) continue;
        const double e = eval.breakdown(i).total_energy();
        const int w = static_cast<int>(std::ceil(e / quantum - 1e-12));
        if (w > cfg.bins) continue;  // alone exceeds the round capacity
        items.push_back({i, std::max(w, 0), 1.0 - eval.normalized_loss(i)});
    }

    domain::SelectionMask mask(n, round);
    if (items.empty()) return mask;  // nothing fits: empty-mask flag

    // Exact table over bins; keep[] records the take/skip decisions so the
    // argmax subset can be reconstructed.
    const std::size_t W = static_cast<std::size_t>(cfg.bins);
    std::vector<double> best(W + 1, 0.0);
    std::vector<std::vector<std::uint8_t>> keep(items.size(), std::vector<std::uint8_t>(W + 1, 0));
    for (std::size_t k = 0; k < items.size(); ++k) {
        const auto& it = items[k];
        for (std::size_t w = W + 1; w-- > static_cast<std::size_t>(it.weight);) {
            const double candidate = best[w - static_cast<std::size_t>(it.weight)] + it.value;
            if (candidate > best[w]) {
                best[w] = candidate;
                keep[k][w] = 1;
            }
        }
    }
    std::size_t w = W;
    for (std::size_t k = items.size(); k-- > 0;) {
        if (keep[k][w]) {
            mask.bits[items[k].client] = 1;
            w -= static_cast<std::size_t>(items[k].weight);
        }
    }
    return mask;
}

double ucb_index(const BanditState& state, std::size_t client_id, int t) {
    if (t < 1) throw std::invalid_argument("ucb_index: t must be >= 1");
    const auto pulls = state.pulls.at(client_id);
    if (pulls == 0) return kInf;
    return state.mean_reward[client_id] +
           std::sqrt(2.0 * std::log(static_cast<double>(t)) / static_cast<double>(pulls));
}

domain::SelectionMask mab_select(const BanditState& state, const fitness::FitnessEvaluator& eval,
                                 const MabConfig& cfg, int round) {
    const std::size_t n = eval.fleet_size();
    if (state.pulls.size() != n)
        throw std::invalid_argument("mab_select: state size does not match fleet");
    const int k = cfg.cardinality > 0
                      ? cfg.cardinality
                      : static_cast<int>((n + 4) / 5);  // ceil(n/5)
    const int t = std::max(state.total_rounds, 1);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (eval.client_hard_ok(i)) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ia = ucb_index(state, a, t), ib = ucb_index(state, b, t);
        if (ia != ib) return ia > ib;
        return a < b;
    });

    domain::SelectionMask mask(n, round);
    double band = 0.0;
    int taken = 0;
    for (std::size_t i : order) {
        if (taken >= k) break;
        const double b = eval.profile(i).bandwidth;
        if (band + b > eval.total_bandwidth()) continue;
        mask.bits[i] = 1;
        band += b;
        ++taken;
    }
    return mask;
}

GaResult ga_select(const fitness::FitnessEvaluator& eval, const GaConfig& cfg, int round) {
    const std::size_t n = eval.fleet_size();
    if (!cfg.valid(n)) throw std::invalid_argument("invalid GA configuration");
    const double mut = cfg.mutation_rate < 0.0 ? 1.0 / static_cast<double>(n) : cfg.mutation_rate;
    const std::size_t P = static_cast<std::size_t>(cfg.population);
    Rng rng(derive_seed(cfg.seed, {0x6Aull}));

    std::vector<domain::SelectionMask> pop(P, domain::SelectionMask(n, round));
    std::vector<double> fit(P);
    for (auto& ind : pop)
        for (auto& bit : ind.bits) bit = rng.uniform() < 0.5 ? 1 : 0;
    for (std::size_t i = 0; i < P; ++i) fit[i] = eval.value(pop[i]);

    auto best_of = [&]() {
        std::size_t b = 0;
        for (std::size_t i = 1; i < P; ++i)
            if (fit[i] < fit[b]) b = i;
        return b;
    };

    GaResult res;
    std::size_t b = best_of();
    res.mask = pop[b];
    res.fitness = fit[b];
    res.trace.push_back(res.fitness);

    for (int g = 0; g < cfg.generations; ++g) {
        std::vector<domain::SelectionMask> next;
        std::vector<double> next_fit;
        next.reserve(P);
        next_fit.reserve(P);

        // Elitism: carry the best-so-far individual unchanged.
        next.push_back(res.mask);
        next_fit.push_back(res.fitness);

        auto tournament = [&]() -> std::size_t {
            std::size_t winner = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(P) - 1));
            for (int c = 1; c < cfg.tournament; ++c) {
                const std::size_t cand = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(P) - 1));
                if (fit[cand] < fit[winner]) winner = cand;
            }
            return winner;
        };

        while (next.size() < P) {
            domain::SelectionMask child_a = pop[tournament()];
            domain::SelectionMask child_b = pop[tournament()];
            if (n >= 2 && rng.uniform() < cfg.crossover_rate) {
                const std::size_t point = static_cast<std::size_t>(
                    rng.uniform_int(1, static_cast<std::int64_t>(n) - 1));
                for (std::size_t d = point; d < n; ++d)
                    std::swap(child_a.bits[d], child_b.bits[d]);
            }
            for (auto* child : {&child_a, &child_b})
                for (auto& bit : child->bits)
                    if (rng.uniform() < mut) bit ^= 1;
            next.push_back(std::move(child_a));
            next_fit.push_back(eval.value(next.back()));
            if (next.size() < P) {
                next.push_back(std::move(child_b));
                next_fit.push_back(eval.value(next.back()));
            }
        }

        pop = std::move(next);
        fit = std::move(next_fit);
        b = best_of();
        if (fit[b] < res.fitness) {
            res.fitness = fit[b];
            res.mask = pop[b];
        }
        res.trace.push_back(res.fitness);
    }
    return res;
}

domain::SelectionMask random_select(std::size_t n, int k, std::uint64_t seed, int round) {
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("random_select: k must be in [1, n]");
    Rng rng(derive_seed(seed, {0x7A2ull}));
    domain::SelectionMask mask(n, round);
    for (int i : rng.sample_without_replacement(static_cast<int>(n), k))
        mask.bits[static_cast<std::size_t>(i)] = 1;
    return mask;
}

}  // namespace otafl::baselines

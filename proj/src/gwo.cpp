#include "otafl/gwo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otafl::gwo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct CoreResult {
    std::vector<double> best;
    double fitness = kInf;
    std::vector<double> trace;
    std::vector<IterationStats> stats;
};

// Promote a candidate into the best-so-far leader triple. Strict comparisons
// keep equal-fitness wolves from churning the leaders; with one full
// evaluation pass and S >= 3 every slot is filled before updates begin.
void offer_leader(WolfPopulation& pop, const std::vector<double>& pos, double fit) {
    if (fit < pop.alpha.fitness) {
        pop.delta = pop.beta;
        pop.beta = pop.alpha;
        pop.alpha = {pos, fit};
    } else if (fit < pop.beta.fitness) {
        pop.delta = pop.beta;
        pop.beta = {pos, fit};
    } else if (fit < pop.delta.fitness) {
        pop.delta = {pos, fit};
    }
}

// Shared loop for binary selection and the continuous test hook; the only
// difference between them is the objective.
CoreResult run_core(const std::function<double(const std::vector<double>&)>& objective,
                    std::size_t dim, const GwoConfig& cfg, const IterationObserver& observer,
                    WolfPopulation* final_pop) {
    if (!cfg.valid()) throw std::invalid_argument("invalid GWO configuration");
    if (dim == 0) throw std::invalid_argument("GWO dimension must be positive");

    const std::size_t S = static_cast<std::size_t>(cfg.population_size);
    std::vector<Rng> streams;
    streams.reserve(S);
    for (std::size_t i = 0; i < S; ++i) streams.emplace_back(derive_seed(cfg.seed, {i}));

    WolfPopulation pop;
    pop.positions.assign(S, std::vector<double>(dim));
    pop.fitnesses.assign(S, kInf);
    pop.alpha.fitness = pop.beta.fitness = pop.delta.fitness = kInf;

    for (std::size_t i = 0; i < S; ++i) {
        for (std::size_t d = 0; d < dim; ++d) pop.positions[i][d] = streams[i].uniform();
        pop.fitnesses[i] = objective(pop.positions[i]);
        offer_leader(pop, pop.positions[i], pop.fitnesses[i]);
    }

    CoreResult out;
    out.trace.push_back(pop.alpha.fitness);

    for (int t = 0; t < cfg.max_iter; ++t) {
        const double a = coefficient_a(t, cfg.max_iter);
        IterationStats st{t, a, kInf, -kInf, 0.0};

        // All wolves move against the same pre-update leader snapshot.
        const std::vector<double> la = pop.alpha.pos, lb = pop.beta.pos, ld = pop.delta.pos;
        for (std::size_t i = 0; i < S; ++i) {
            std::array<Coefficients, 3> coeffs;
            for (auto& c : coeffs) {
                c = coefficients_AC(a, dim, streams[i]);
                for (double v : c.A) {
                    st.A_min = std::min(st.A_min, v);
                    st.A_max = std::max(st.A_max, v);
                }
            }
            pop.positions[i] =
                leader_guided_update(pop.positions[i], la, lb, ld, coeffs, cfg.wolf_weights);
            pop.fitnesses[i] = objective(pop.positions[i]);
        }
        for (std::size_t i = 0; i < S; ++i)
            offer_leader(pop, pop.positions[i], pop.fitnesses[i]);

        pop.iteration = t + 1;
        st.best_fitness = pop.alpha.fitness;
        out.trace.push_back(pop.alpha.fitness);
        out.stats.push_back(st);
        if (observer) observer(pop);
    }

    out.best = pop.alpha.pos;
    out.fitness = pop.alpha.fitness;
    if (final_pop) *final_pop = std::move(pop);
    return out;
}
}  // namespace

bool GwoConfig::valid() const {
    if (population_size < 4 || max_iter < 1) return false;
    if (decode_threshold < 0.0 || decode_threshold > 1.0) return false;
    double sum = 0.0;
    for (double w : wolf_weights) {
        if (w < 0.0) return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= 1e-9;
}

double coefficient_a(int t, int max_iter) {
    return 2.0 - static_cast<double>(t) * 2.0 / static_cast<double>(max_iter);
}

Coefficients coefficients_AC(double a, std::size_t dim, Rng& rng) {
    Coefficients c;
    c.A.resize(dim);
    c.C.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        c.A[d] = 2.0 * a * rng.uniform() - a;
        c.C[d] = 2.0 * rng.uniform();
    }
    return c;
}

std::vector<double> leader_guided_update(const std::vector<double>& x,
                                         const std::vector<double>& alpha,
                                         const std::vector<double>& beta,
                                         const std::vector<double>& delta,
                                         const std::array<Coefficients, 3>& coeffs,
                                         const std::array<double, 3>& wolf_weights) {
    const std::size_t n = x.size();
    const std::vector<double>* leaders[3] = {&alpha, &beta, &delta};
    std::vector<double> out(n, 0.0);
    for (int k = 0; k < 3; ++k) {
        const std::vector<double>& L = *leaders[k];
        for (std::size_t d = 0; d < n; ++d) {
            const double dist = std::abs(coeffs[k].C[d] * L[d] - x[d]);
            out[d] += wolf_weights[k] * (L[d] - coeffs[k].A[d] * dist);
        }
    }
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

domain::SelectionMask decode(const std::vector<double>& position, double threshold, int round) {
    domain::SelectionMask mask(position.size(), round);
    for (std::size_t i = 0; i < position.size(); ++i)
        mask.bits[i] = position[i] > threshold ? 1 : 0;
    return mask;
}

GwoResult optimize(const fitness::FitnessEvaluator& eval, const GwoConfig& cfg, int round,
                   const IterationObserver& observer) {
    const auto objective = [&](const std::vector<double>& pos) {
        return eval.value(decode(pos, cfg.decode_threshold, round));
    };
    CoreResult core = run_core(objective, eval.fleet_size(), cfg, observer, nullptr);

    GwoResult res;
    res.mask = decode(core.best, cfg.decode_threshold, round);
    res.fitness = core.fitness;
    res.trace = std::move(core.trace);
    res.stats = std::move(core.stats);
    res.feasible = eval.feasibility(res.mask).feasible();
    return res;
}

GwoResult optimize(const std::vector<domain::ClientProfile>& fleet,
                   const domain::SystemConfig& sys, const domain::SelectionHistory& hist,
                   const fitness::FitnessWeights& weights, const GwoConfig& cfg, int round) {
    fitness::FitnessEvaluator eval(fleet, sys, hist, weights);
    return optimize(eval, cfg, round);
}

ContinuousResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                          std::size_t dim, const GwoConfig& cfg) {
    CoreResult core = run_core(objective, dim, cfg, {}, nullptr);
    return {std::move(core.best), core.fitness, std::move(core.trace)};
}

}  // namespace otafl::gwo

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "otafl/cost_model.hpp"
#include "otafl/fl_sim.hpp"
#include "otafl/fitness.hpp"
#include "otafl/rng.hpp"

using namespace otafl;

namespace {

// Same hand-fleet recipe as the fitness suite: hard-feasible, quota-free.
std::vector<domain::ClientProfile> make_fleet(int n) {
    std::vector<domain::ClientProfile> fleet;
    for (int i = 0; i < n; ++i) {
        domain::ClientProfile p;
        p.id = i;
        p.data_size = 40 + 10 * (i % 3);
        p.cycles_per_sample = 1e6 * (1.0 + 0.1 * i);
        p.cpu_freq = 1e9 * (1.0 + 0.05 * i);
        p.cpu_freq_max = 2.0 * p.cpu_freq;
        p.iteration_factor = 1.0 + 0.2 * (i % 3);
        p.target_accuracy = 0.20 + 0.05 * i;
        p.energy_coeff = 1e-27;
        p.tx_power = 0.10 + 0.02 * i;
        p.tx_power_max = 2.0 * p.tx_power;
        p.bandwidth = 1e6 * (1.0 + 0.1 * (i % 4));
        p.channel_gain = 1e-6 * (1.0 + 0.3 * i);
        p.failure_count = 0;  // deterministic rounds unless a test overrides
        p.delay_budget = 5.0;
        p.energy_budget = 5.0;
        p.historical_loss = 1.0 + 0.25 * i;
        fleet.push_back(p);
    }
    return fleet;
}

fl_sim::SimState make_state(domain::SelectionTiming timing) {
    fl_sim::SimState st;
    st.fleet = make_fleet(4);
    st.sys.noise_psd = 1e-17;
    st.sys.total_bandwidth = 1e8;
    st.sys.model_size_bits = 1e6;
    st.sys.min_reliability = 0.0;
    st.sys.total_rounds = 10;
    st.sys.master_seed = 5;
    st.sys.selection_timing = timing;
    st.trainer.num_classes = 3;
    st.trainer.epochs = 1;
    st.trainer.learning_rate = 0.05;
    st.trainer.batch_size = 16;

    fl_sim::SyntheticDataSpec spec;
    spec.num_classes = 3;
    spec.feature_dim = 4;
    spec.total_samples = 400;
    spec.seed = 13;
    const auto full = fl_sim::make_synthetic_dataset(spec);
    std::size_t demand = 0;
    for (const auto& p : st.fleet) demand += std::size_t(p.data_size);
    st.client_data = fl_sim::partition_data(fl_sim::slice(full, 0, demand), st.fleet, 5.0, 17);
    st.test_data = fl_sim::slice(full, demand, 400);
    st.model = fl_sim::init_model(st.trainer, 4);
    st.hist = domain::SelectionHistory(4);
    return st;
}

struct FixedDriver : fl_sim::SelectorDriver {
    std::vector<std::uint8_t> bits;
    int calls = 0;
    int throw_on_call = -1;  // 1-based; -1 disables
    std::vector<double> gains;

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        ++calls;
        if (calls == throw_on_call) throw std::runtime_error("selector exploded");
        domain::SelectionMask m(eval.fleet_size(), round);
        m.bits = bits;
        return m;
    }
    void feedback(const domain::SelectionMask&, double gain) override { gains.push_back(gain); }
    std::string name() const override { return "fixed"; }
};

}  // namespace

TEST_CASE("dataset slicing") {
    fl_sim::SyntheticDataSpec spec;
    spec.num_classes = 2;
    spec.feature_dim = 2;
    spec.total_samples = 10;
    const auto src = fl_sim::make_synthetic_dataset(spec);
    const auto mid = fl_sim::slice(src, 2, 5);
    REQUIRE(mid.size() == 3);
    CHECK(mid.feature_dim == 2);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(mid.labels[s] == src.labels[s + 2]);
        CHECK(mid.row(s)[0] == src.row(s + 2)[0]);
        CHECK(mid.row(s)[1] == src.row(s + 2)[1]);
    }
    CHECK(fl_sim::slice(src, 4, 4).size() == 0);
    CHECK_THROWS_AS((void)fl_sim::slice(src, 5, 3), std::out_of_range);
    CHECK_THROWS_AS((void)fl_sim::slice(src, 0, 11), std::out_of_range);
}

TEST_CASE("over-the-air aggregation") {
    const std::vector<std::vector<double>> ups{{1.0, 3.0}, {5.0, 7.0}};

    // Weights renormalize: {1,3} -> {0.25, 0.75}.
    const auto clean = fl_sim::ota_aggregate(ups, {1.0, 3.0}, std::nullopt);
    CHECK(clean == std::vector<double>{4.0, 6.0});

    // An infinite SNR sentinel is exactly noiseless and needs no rng.
    const auto inf_snr = fl_sim::ota_aggregate(
        ups, {1.0, 3.0}, std::numeric_limits<double>::infinity());
    CHECK(inf_snr == clean);

    // A zero aggregate carries no signal power, so no noise is drawn.
    const auto zero = fl_sim::ota_aggregate({{0.0, 0.0}}, {1.0}, 10.0);
    CHECK(zero == std::vector<double>{0.0, 0.0});

    // Finite SNR: noise variance is mean-square power * 10^(-snr/10).
    Rng rng(4242);
    const auto noisy =
        fl_sim::ota_aggregate({std::vector<double>(20000, 1.0)}, {1.0}, 10.0, &rng);
    double mean = 0.0;
    for (double v : noisy) mean += v;
    mean /= double(noisy.size());
    double var = 0.0;
    for (double v : noisy) var += (v - mean) * (v - mean);
    var /= double(noisy.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
    CHECK(var == doctest::Approx(0.1).epsilon(0.10));

    CHECK_THROWS_AS((void)fl_sim::ota_aggregate({}, {}, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS((void)fl_sim::ota_aggregate(ups, {1.0}, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)fl_sim::ota_aggregate(ups, {1.0, -1.0}, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)fl_sim::ota_aggregate({{1.0, 2.0}, {1.0}}, {1.0, 1.0}, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)fl_sim::ota_aggregate(ups, {1.0, 3.0}, 10.0, nullptr),
                    std::invalid_argument);
}

TEST_CASE("failure injection") {
    auto fleet = make_fleet(4);
    domain::SystemConfig sys;
    sys.noise_psd = 1e-17;
    sys.model_size_bits = 1e6;

    domain::SelectionMask all(4, 0);
    all.bits = {1, 1, 1, 1};
    // failure_count 0 everywhere: nobody can fail.
    CHECK(fl_sim::inject_failures(all, fleet, sys, 1).empty());

    // failure_count 40: reliability collapses below the uniform draw floor.
    for (auto& p : fleet) p.failure_count = 40;
    for (int round = 0; round < 5; ++round) {
        domain::SelectionMask m(4, round);
        m.bits = {1, 1, 1, 1};
        CHECK(fl_sim::inject_failures(m, fleet, sys, 1) == std::vector<int>{0, 1, 2, 3});
    }

    // Per-client streams: a singleton mask reproduces the full mask's verdict
    // for that client, so scheduling cannot change outcomes.
    for (auto& p : fleet) p.failure_count = 1;
    domain::SelectionMask full(4, 3);
    full.bits = {1, 1, 1, 1};
    const auto joint = fl_sim::inject_failures(full, fleet, sys, 9);
    for (std::size_t i = 0; i < 4; ++i) {
        domain::SelectionMask solo(4, 3);
        solo.bits[i] = 1;
        const auto alone = fl_sim::inject_failures(solo, fleet, sys, 9);
        const bool joint_failed =
            std::find(joint.begin(), joint.end(), int(i)) != joint.end();
        CHECK(alone.size() == std::size_t(joint_failed ? 1 : 0));
    }

    // Long-run failure frequency tracks 1 - rho.
    const double rho = cost::evaluate(fleet[0], sys).reliability;
    REQUIRE(rho > 0.05);
    REQUIRE(rho < 0.95);
    int fails = 0;
    for (int round = 0; round < 500; ++round) {
        domain::SelectionMask m(4, round);
        m.bits = {1, 0, 0, 0};
        fails += int(fl_sim::inject_failures(m, fleet, sys, 77).size());
    }
    CHECK(double(fails) / 500.0 == doctest::Approx(1.0 - rho).epsilon(0.15));

    domain::SelectionMask wrong(3, 0);
    CHECK_THROWS_AS((void)fl_sim::inject_failures(wrong, fleet, sys, 1),
                    std::invalid_argument);
}

TEST_CASE("constraint projection") {
    domain::SystemConfig sys;
    sys.noise_psd = 1e-17;
    sys.model_size_bits = 1e6;
    sys.total_bandwidth = 1e8;
    sys.total_rounds = 10;

    {
        // Hard-infeasible clients are dropped from the proposal.
        auto fleet = make_fleet(4);
        fleet[2].delay_budget = 0.0;
        domain::SelectionHistory hist(4);
        fitness::FitnessEvaluator eval(fleet, sys, hist);
        domain::SelectionMask prop(4, 6);
        prop.bits = {1, 1, 1, 0};
        const auto out = fl_sim::enforce_constraints(prop, eval);
        CHECK(out.bits == std::vector<std::uint8_t>{1, 1, 0, 0});
        CHECK(out.round == 6);
    }
    {
        // A client whose quota is only savable now is forced in even from an
        // empty proposal.
        auto fleet = make_fleet(2);
        fleet[0].min_selection_fraction = 0.5;  // quota 5 of T=10
        domain::SelectionHistory hist(2);
        domain::SelectionMask m(2, 0);
        for (int r = 0; r < 8; ++r) {
            m.bits = {r < 4 ? std::uint8_t(1) : std::uint8_t(0), 0};
            hist.record(m);
        }
        fitness::FitnessEvaluator eval(fleet, sys, hist);
        REQUIRE(eval.forced_clients() == std::vector<int>{0});
        domain::SelectionMask empty(2, 8);
        const auto out = fl_sim::enforce_constraints(empty, eval);
        CHECK(out.bits == std::vector<std::uint8_t>{1, 0});
    }
    {
        // Bandwidth shedding drops the widest non-forced client first; the
        // forced client survives even though it is the widest overall.
        auto fleet = make_fleet(3);
        fleet[0].bandwidth = 3e6;
        fleet[1].bandwidth = 2e6;
        fleet[2].bandwidth = 1e6;
        fleet[0].min_selection_fraction = 0.5;
        auto tight = sys;
        tight.total_bandwidth = 4e6;
        domain::SelectionHistory hist(3);
        domain::SelectionMask m(3, 0);
        for (int r = 0; r < 8; ++r) {
            m.bits = {r < 4 ? std::uint8_t(1) : std::uint8_t(0), 0, 0};
            hist.record(m);
        }
        fitness::FitnessEvaluator eval(fleet, tight, hist);
        REQUIRE(eval.forced_clients() == std::vector<int>{0});
        domain::SelectionMask prop(3, 8);
        prop.bits = {1, 1, 1};
        const auto out = fl_sim::enforce_constraints(prop, eval);
        CHECK(out.bits == std::vector<std::uint8_t>{1, 0, 1});
    }
    {
        // Feasible proposals pass through untouched; impossible budgets shed
        // everything rather than looping.
        const auto fleet = make_fleet(4);
        domain::SelectionHistory hist(4);
        fitness::FitnessEvaluator eval(fleet, sys, hist);
        domain::SelectionMask prop(4, 2);
        prop.bits = {0, 1, 0, 1};
        CHECK(fl_sim::enforce_constraints(prop, eval).bits == prop.bits);
        domain::SelectionMask empty(4, 2);
        CHECK(fl_sim::enforce_constraints(empty, eval).count() == 0);

        auto zero_band = sys;
        zero_band.total_bandwidth = 0.0;
        fitness::FitnessEvaluator tight_eval(fleet, zero_band, hist);
        CHECK(fl_sim::enforce_constraints(prop, tight_eval).count() == 0);

        domain::SelectionMask wrong(3, 0);
        CHECK_THROWS_AS((void)fl_sim::enforce_constraints(wrong, eval),
                        std::invalid_argument);
    }
}

TEST_CASE("round accounting under select-then-train") {
    auto st = make_state(domain::SelectionTiming::SelectThenTrain);
    const auto fleet_before = st.fleet;
    const auto hist_before = st.hist;
    const auto model_before = st.model;

    FixedDriver driver;
    driver.bits = {1, 0, 1, 0};
    const auto rec = fl_sim::run_round(st, driver);

    CHECK(rec.round == 0);
    CHECK(rec.mask.bits == driver.bits);
    CHECK_FALSE(rec.aborted);
    CHECK(rec.failures.empty());

    // Costs come from the static per-client model.
    const auto c0 = cost::evaluate(fleet_before[0], st.sys);
    const auto c2 = cost::evaluate(fleet_before[2], st.sys);
    CHECK(rec.round_delay == std::max(c0.total_delay(), c2.total_delay()));
    CHECK(rec.round_energy ==
          doctest::Approx(c0.comp_energy + c2.comp_energy + c0.tx_energy + c2.tx_energy)
              .epsilon(1e-15));

    // Only the selected clients trained and had their history advanced.
    REQUIRE(rec.per_client_loss.size() == 2);
    CHECK(rec.per_client_loss.count(0) == 1);
    CHECK(rec.per_client_loss.count(2) == 1);
    CHECK(st.fleet[0].historical_loss ==
          doctest::Approx(0.5 * fleet_before[0].historical_loss +
                          0.5 * rec.per_client_loss.at(0))
              .epsilon(1e-15));
    CHECK(st.fleet[1].historical_loss == fleet_before[1].historical_loss);
    CHECK(st.fleet[3].historical_loss == fleet_before[3].historical_loss);

    // selected_fitness is scored against the pre-round state.
    fitness::FitnessEvaluator pre(fleet_before, st.sys, hist_before, st.weights);
    CHECK(rec.selected_fitness == pre.value(rec.mask));

    // Model update: per-client deltas under the documented seed derivation,
    // aggregated by data size through the same channel model.
    std::vector<std::vector<double>> updates;
    std::vector<double> weights;
    for (std::size_t i : {std::size_t(0), std::size_t(2)}) {
        fl_sim::TrainerConfig tcfg = st.trainer;
        tcfg.seed = derive_seed(st.sys.master_seed, {0ull, std::uint64_t(i), 0x7E41ull});
        auto fleet_copy = fleet_before[i];
        const auto res =
            fl_sim::local_train(model_before, st.client_data[i], tcfg, &fleet_copy);
        CHECK(rec.per_client_loss.at(int(i)) == res.final_loss);
        CHECK(st.fleet[i].historical_loss == fleet_copy.historical_loss);
        updates.push_back(res.delta);
        weights.push_back(double(fleet_before[i].data_size));
    }
    const auto agg = fl_sim::ota_aggregate(updates, weights, st.sys.ota_snr_db);
    REQUIRE(st.model.w.size() == model_before.w.size());
    for (std::size_t j = 0; j < st.model.w.size(); ++j)
        CHECK(st.model.w[j] == model_before.w[j] + agg[j]);
    CHECK(st.model.version == 1);

    const auto ev = fl_sim::evaluate(st.model, st.test_data);
    CHECK(rec.global_loss == ev.loss);
    CHECK(rec.global_accuracy == ev.accuracy);

    CHECK(st.hist.rounds_elapsed == 1);
    CHECK(st.hist.counts == std::vector<std::int64_t>{1, 0, 1, 0});
    CHECK(st.round == 1);
}

TEST_CASE("train-then-select spends compute fleet-wide, same model path") {
    auto stt = make_state(domain::SelectionTiming::SelectThenTrain);
    auto tts = make_state(domain::SelectionTiming::TrainThenSelect);

    FixedDriver d1, d2;
    d1.bits = d2.bits = {1, 0, 1, 0};
    const auto r_stt = fl_sim::run_round(stt, d1);
    const auto r_tts = fl_sim::run_round(tts, d2);

    CHECK(r_tts.mask.bits == r_stt.mask.bits);
    // Energy gap is exactly the unselected clients' local compute.
    double unselected_comp = 0.0;
    for (std::size_t i : {std::size_t(1), std::size_t(3)})
        unselected_comp += cost::evaluate(stt.fleet[i], stt.sys).comp_energy;
    CHECK(r_tts.round_energy ==
          doctest::Approx(r_stt.round_energy + unselected_comp).epsilon(1e-12));
    CHECK(r_tts.round_delay >= r_stt.round_delay);
    CHECK(r_tts.per_client_loss.size() == 4);

    // Identical per-client train streams: the aggregated model agrees bit for
    // bit even though the timing of selection differs.
    CHECK(tts.model.w == stt.model.w);
    // Every client's historical loss moved in the train-first mode.
    auto base = make_state(domain::SelectionTiming::TrainThenSelect);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(tts.fleet[i].historical_loss != base.fleet[i].historical_loss);
}

TEST_CASE("a fully failed round aborts without touching the model") {
    auto st = make_state(domain::SelectionTiming::SelectThenTrain);
    for (auto& p : st.fleet) p.failure_count = 40;
    const auto model_before = st.model;

    FixedDriver driver;
    driver.bits = {1, 0, 1, 0};
    const auto rec = fl_sim::run_round(st, driver);

    CHECK(rec.aborted);
    CHECK(rec.failures == std::vector<int>{0, 2});
    CHECK(st.model.w == model_before.w);
    CHECK(st.model.version == 0);
    // Compute energy was still spent; no transmission happened.
    const auto c0 = cost::evaluate(st.fleet[0], st.sys);
    const auto c2 = cost::evaluate(st.fleet[2], st.sys);
    CHECK(rec.round_energy == doctest::Approx(c0.comp_energy + c2.comp_energy).epsilon(1e-12));
    // The selection still counts toward fairness history.
    CHECK(st.hist.rounds_elapsed == 1);
    CHECK(st.hist.counts == std::vector<std::int64_t>{1, 0, 1, 0});
}

TEST_CASE("experiment loop: determinism, feedback gains, error truncation") {
    auto s1 = make_state(domain::SelectionTiming::SelectThenTrain);
    auto s2 = make_state(domain::SelectionTiming::SelectThenTrain);
    FixedDriver d1, d2;
    d1.bits = d2.bits = {1, 1, 0, 0};

    const double initial_acc = fl_sim::evaluate(s1.model, s1.test_data).accuracy;
    const auto r1 = fl_sim::run_experiment(s1, d1, 3);
    const auto r2 = fl_sim::run_experiment(s2, d2, 3);
    REQUIRE(r1.ok());
    REQUIRE(r1.records.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(r1.records[r].round == int(r));
        CHECK(r1.records[r].mask.bits == r2.records[r].mask.bits);
        CHECK(r1.records[r].global_loss == r2.records[r].global_loss);
        CHECK(r1.records[r].global_accuracy == r2.records[r].global_accuracy);
    }
    // feedback receives held-out accuracy deltas, seeded by the pre-round
    // evaluation of the initial model.
    REQUIRE(d1.gains.size() == 3);
    CHECK(d1.gains[0] ==
          doctest::Approx(r1.records[0].global_accuracy - initial_acc).epsilon(1e-15));
    CHECK(d1.gains[1] ==
          doctest::Approx(r1.records[1].global_accuracy - r1.records[0].global_accuracy)
              .epsilon(1e-15));

    // A selector fault on the third round keeps the first two records.
    auto s3 = make_state(domain::SelectionTiming::SelectThenTrain);
    FixedDriver d3;
    d3.bits = {1, 1, 0, 0};
    d3.throw_on_call = 3;
    const auto r3 = fl_sim::run_experiment(s3, d3, 5);
    CHECK_FALSE(r3.ok());
    CHECK(r3.error == "selector exploded");
    CHECK(r3.records.size() == 2);

    // rounds <= 0 falls back to sys.total_rounds.
    auto s4 = make_state(domain::SelectionTiming::SelectThenTrain);
    s4.sys.total_rounds = 2;
    FixedDriver d4;
    d4.bits = {1, 0, 0, 0};
    CHECK(fl_sim::run_experiment(s4, d4).records.size() == 2);

    // Mismatched client data is rejected up front.
    auto s5 = make_state(domain::SelectionTiming::SelectThenTrain);
    s5.client_data.pop_back();
    FixedDriver d5;
    d5.bits = {1, 0, 0, 0};
    const auto r5 = fl_sim::run_experiment(s5, d5, 1);
    CHECK_FALSE(r5.ok());
    CHECK(r5.records.empty());
}

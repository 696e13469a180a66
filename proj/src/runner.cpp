#include "otafl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "otafl/baselines.hpp"
#include "otafl/cost_model.hpp"
#include "otafl/gwo.hpp"
#include "otafl/rng.hpp"

namespace otafl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kSelectorSeedTag = 0x5E1;
constexpr std::uint64_t kTrainerSeedTag = 0x7EED;
constexpr std::uint64_t kDataSeedTag = 0xDA7A;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class GwoDriver final : public fl_sim::SelectorDriver {
public:
    GwoDriver(const gwo::GwoConfig& base, std::uint64_t master) : base_(base), master_(master) {}

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        gwo::GwoConfig cfg = base_;
        cfg.seed = derive_seed(master_, {static_cast<std::uint64_t>(round), kSelectorSeedTag});
        gwo::GwoResult res = gwo::optimize(eval, cfg, round);
        traces_.push_back(std::move(res.trace));
        return res.mask;
    }
    std::vector<double> last_trace() const override {
        return traces_.empty() ? std::vector<double>{} : traces_.back();
    }
    std::vector<std::vector<double>> all_traces() const override { return traces_; }
    std::string name() const override { return "gwo"; }

private:
    gwo::GwoConfig base_;
    std::uint64_t master_;
    std::vector<std::vector<double>> traces_;
};

class GaDriver final : public fl_sim::SelectorDriver {
public:
    GaDriver(const baselines::GaConfig& base, std::uint64_t master)
        : base_(base), master_(master) {}

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        baselines::GaConfig cfg = base_;
        cfg.seed = derive_seed(master_, {static_cast<std::uint64_t>(round), kSelectorSeedTag});
        baselines::GaResult res = baselines::ga_select(eval, cfg, round);
        traces_.push_back(std::move(res.trace));
        return res.mask;
    }
    std::vector<double> last_trace() const override {
        return traces_.empty() ? std::vector<double>{} : traces_.back();
    }
    std::vector<std::vector<double>> all_traces() const override { return traces_; }
    std::string name() const override { return "ga"; }

private:
    baselines::GaConfig base_;
    std::uint64_t master_;
    std::vector<std::vector<double>> traces_;
};

class DpDriver final : public fl_sim::SelectorDriver {
public:
    explicit DpDriver(const baselines::DpConfig& cfg) : cfg_(cfg) {}

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        return baselines::dp_select(eval, cfg_, round);
    }
    std::string name() const override { return "dp"; }

private:
    baselines::DpConfig cfg_;
};

class MabDriver final : public fl_sim::SelectorDriver {
public:
    explicit MabDriver(const baselines::MabConfig& cfg) : cfg_(cfg) {}

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        if (!state_.has_value()) state_.emplace(eval.fleet_size());
        return baselines::mab_select(*state_, eval, cfg_, round);
    }
    // Rewards are min-max-normalized online over the gains seen so far
    // (0.5 while the range is still degenerate) so the UCB means stay in a
    // comparable [0, 1] band regardless of the learning curve's scale.
    void feedback(const domain::SelectionMask& mask, double accuracy_gain) override {
        if (!state_.has_value()) return;
        gain_min_ = std::min(gain_min_, accuracy_gain);
        gain_max_ = std::max(gain_max_, accuracy_gain);
        const double range = gain_max_ - gain_min_;
        const double reward = range > 0.0 ? (accuracy_gain - gain_min_) / range : 0.5;
        state_->update(mask, reward);
    }
    std::string name() const override { return "mab"; }

private:
    baselines::MabConfig cfg_;
    std::optional<baselines::BanditState> state_;
    double gain_min_ = std::numeric_limits<double>::infinity();
    double gain_max_ = -std::numeric_limits<double>::infinity();
};

class RandomDriver final : public fl_sim::SelectorDriver {
public:
    RandomDriver(int k, std::uint64_t master) : k_(k), master_(master) {}

    domain::SelectionMask select(const fitness::FitnessEvaluator& eval, int round) override {
        const int k = std::min<int>(k_, static_cast<int>(eval.fleet_size()));
        const std::uint64_t seed =
            derive_seed(master_, {static_cast<std::uint64_t>(round), kSelectorSeedTag});
        return baselines::random_select(eval.fleet_size(), k, seed, round);
    }
    std::string name() const override { return "random"; }

private:
    int k_;
    std::uint64_t master_;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

json summary_json(const metrics::ExperimentSummary& s) {
    json j;
    j["final_accuracy_pct"] = s.final_accuracy_pct;
    j["final_loss"] = s.final_loss;
    j["convergence_time_s"] = s.convergence_time_s;
    j["convergence_round"] = s.convergence_round;
    j["converged"] = s.converged;
    j["total_energy_j"] = s.total_energy_j;
    j["gee"] = s.gee;
    j["avg_reliability"] = s.avg_reliability;
    j["worst_reliability"] = s.worst_reliability;
    j["avg_fairness"] = s.avg_fairness;
    j["worst_fairness"] = s.worst_fairness;
    j["mean_selected_fitness"] = s.mean_selected_fitness;
    j["mean_selected_count"] = s.mean_selected_count;
    j["total_failures"] = s.total_failures;
    j["aborted_rounds"] = s.aborted_rounds;
    return j;
}

}  // namespace

std::unique_ptr<fl_sim::SelectorDriver> make_driver(const SelectorSpec& spec,
                                                    std::uint64_t master_seed) {
    switch (spec.kind) {
        case SelectorKind::Gwo: return std::make_unique<GwoDriver>(spec.gwo, master_seed);
        case SelectorKind::Ga: return std::make_unique<GaDriver>(spec.ga, master_seed);
        case SelectorKind::Dp: return std::make_unique<DpDriver>(spec.dp);
        case SelectorKind::Mab: return std::make_unique<MabDriver>(spec.mab);
        case SelectorKind::Random: return std::make_unique<RandomDriver>(spec.random_k,
                                                                         master_seed);
    }
    throw std::logic_error("make_driver: unhandled selector kind");
}

fl_sim::SimState build_sim_state(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    materialize_fleet(c);
    if (c.fleet.empty()) throw ScenarioError("fleet: empty after materialization");
    const domain::ValidationReport report = domain::validate_fleet(c.fleet, c.sys);
    if (!report.ok()) {
        std::string msg = "fleet validation failed:";
        for (const auto& e : report.errors) msg += "\n  " + e;
        throw ScenarioError(msg);
    }
    if (c.selector.kind == SelectorKind::Ga && !c.selector.ga.valid(c.fleet.size()))
        throw ScenarioError("selector.params: invalid GA parameters for this fleet size");

    fl_sim::SimState st;
    st.fleet = std::move(c.fleet);
    st.sys = c.sys;
    st.weights = c.weights;
    st.trainer = c.trainer;
    st.trainer.seed = derive_seed(c.sys.master_seed, {kTrainerSeedTag});

    std::size_t train_need = 0;
    for (const auto& p : st.fleet) train_need += static_cast<std::size_t>(p.data_size);
    const double tf = c.data.test_fraction;
    std::size_t total = static_cast<std::size_t>(
        std::ceil(static_cast<double>(train_need) / (1.0 - tf)));
    total = std::max(total, train_need + 1);
    if (total > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw ScenarioError("data: fleet demands more samples than the generator supports");

    fl_sim::SyntheticDataSpec sd;
    sd.num_classes = c.trainer.num_classes;
    sd.feature_dim = c.data.feature_dim;
    sd.total_samples = static_cast<int>(total);
    sd.class_separation = c.data.class_separation;
    sd.noise_std = c.data.noise_std;
    sd.seed = derive_seed(c.sys.master_seed, {kDataSeedTag});
    const fl_sim::LocalDataset source = fl_sim::make_synthetic_dataset(sd);
    const fl_sim::LocalDataset train_pool = fl_sim::slice(source, 0, train_need);
    st.test_data = fl_sim::slice(source, train_need, total);
    st.client_data = fl_sim::partition_data(train_pool, st.fleet, c.data.dirichlet_alpha,
                                            derive_seed(c.sys.master_seed, {kDataSeedTag, 1}));
    st.model = fl_sim::init_model(st.trainer, c.data.feature_dim);
    st.hist = domain::SelectionHistory(st.fleet.size());
    return st;
}

RunOutcome run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    ScenarioConfig c = cfg;
    c.out_dir = out_dir;
    materialize_fleet(c);

    fl_sim::SimState st = build_sim_state(c);
    std::unique_ptr<fl_sim::SelectorDriver> driver = make_driver(c.selector, c.sys.master_seed);

    RunOutcome out;
    out.out_dir = out_dir;
    out.result = fl_sim::run_experiment(st, *driver, c.sys.total_rounds);
    const auto& records = out.result.records;

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "scenario.json", to_json(c));

    std::vector<cost::CostBreakdown> costs(st.fleet.size());
    for (std::size_t i = 0; i < st.fleet.size(); ++i)
        costs[i] = cost::evaluate(st.fleet[i], st.sys);

    std::string rounds_csv = "round,loss,accuracy,delay_s,energy_j,iee,selected_count,failures\n";
    std::string selections_csv =
        "round,client_id,delay_s,energy_j,reliability,bandwidth,failed\n";
    for (const auto& rec : records) {
        const double acc_pct = rec.global_accuracy * 100.0;
        rounds_csv += std::to_string(rec.round) + "," + fmt(rec.global_loss) + "," +
                      fmt(acc_pct) + "," + fmt(rec.round_delay) + "," + fmt(rec.round_energy) +
                      "," + fmt(metrics::instantaneous_ee(acc_pct, rec.round_energy)) + "," +
                      std::to_string(rec.mask.count()) + "," +
                      std::to_string(rec.failures.size()) + "\n";
        for (std::size_t i = 0; i < rec.mask.size(); ++i) {
            if (!rec.mask.selected(i)) continue;
            const bool failed = std::find(rec.failures.begin(), rec.failures.end(),
                                          st.fleet[i].id) != rec.failures.end();
            selections_csv += std::to_string(rec.round) + "," +
                              std::to_string(st.fleet[i].id) + "," +
                              fmt(costs[i].total_delay()) + "," + fmt(costs[i].total_energy()) +
                              "," + fmt(costs[i].reliability) + "," +
                              fmt(st.fleet[i].bandwidth) + "," + (failed ? "1" : "0") + "\n";
        }
    }
    write_file(fs::path(out_dir) / "rounds.csv", rounds_csv);
    write_file(fs::path(out_dir) / "selections.csv", selections_csv);

    const auto traces = driver->all_traces();
    if (!traces.empty()) {
        std::string trace_csv = "round,iteration,best_fitness\n";
        for (std::size_t r = 0; r < traces.size(); ++r)
            for (std::size_t it = 0; it < traces[r].size(); ++it)
                trace_csv += std::to_string(r) + "," + std::to_string(it) + "," +
                             fmt(traces[r][it]) + "\n";
        write_file(fs::path(out_dir) / "trace.csv", trace_csv);
    }

    json sj;
    sj["selector"] = driver->name();
    sj["master_seed"] = c.sys.master_seed;
    sj["rounds_executed"] = records.size();
    sj["clients"] = st.fleet.size();
    if (!records.empty()) {
        out.summary = metrics::summarize(records, st.fleet, st.sys, st.hist, c.convergence);
        sj["summary"] = summary_json(out.summary);
    }
    if (!out.result.ok()) sj["error"] = out.result.error;
    write_file(fs::path(out_dir) / "summary.json", sj.dump(2) + "\n");

    json meta;
    meta["finished_unix"] = static_cast<std::int64_t>(std::time(nullptr));
    write_file(fs::path(out_dir) / "meta.json", meta.dump(2) + "\n");
    return out;
}

SweepOutcome run_sweep(const ScenarioConfig& cfg, const std::vector<SelectorKind>& selectors,
                       const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    if (selectors.empty() || seeds.empty())
        throw ScenarioError("sweep: needs at least one selector and one seed");
    SweepOutcome out;
    fs::create_directories(out_dir);

    for (const SelectorKind kind : selectors) {
        for (const std::uint64_t seed : seeds) {
            ScenarioConfig cell = cfg;
            cell.selector.kind = kind;
            cell.sys.master_seed = seed;
            cell.fleet.clear();  // regenerate per seed: same fleet across selectors
            SweepRow row;
            row.selector = to_string(kind);
            row.seed = seed;
            const std::string cell_dir =
                (fs::path(out_dir) / (row.selector + "_seed" + std::to_string(seed))).string();
            try {
                RunOutcome run = run_scenario(cell, cell_dir);
                row.summary = run.summary;
                if (!run.ok()) row.error = run.result.error;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            if (!row.ok()) out.partial = true;
            out.rows.push_back(std::move(row));
        }
    }

    // One mean row per selector over its successful cells. The converged
    // column of a mean row is the fraction of converged cells.
    std::vector<SweepRow> means;
    std::vector<double> mean_converged;
    for (const SelectorKind kind : selectors) {
        const std::string name = to_string(kind);
        metrics::ExperimentSummary acc;
        int n = 0;
        int converged_cells = 0;
        for (const auto& row : out.rows) {
            if (row.selector != name || !row.ok()) continue;
            if (row.summary.converged) ++converged_cells;
            acc.final_accuracy_pct += row.summary.final_accuracy_pct;
            acc.final_loss += row.summary.final_loss;
            acc.convergence_time_s += row.summary.convergence_time_s;
            acc.total_energy_j += row.summary.total_energy_j;
            acc.gee += row.summary.gee;
            acc.avg_reliability += row.summary.avg_reliability;
            acc.worst_reliability += row.summary.worst_reliability;
            acc.avg_fairness += row.summary.avg_fairness;
            acc.worst_fairness += row.summary.worst_fairness;
            acc.mean_selected_fitness += row.summary.mean_selected_fitness;
            acc.mean_selected_count += row.summary.mean_selected_count;
            acc.total_failures += row.summary.total_failures;
            acc.aborted_rounds += row.summary.aborted_rounds;
            ++n;
        }
        if (n == 0) continue;
        const double inv = 1.0 / n;
        acc.final_accuracy_pct *= inv;
        acc.final_loss *= inv;
        acc.convergence_time_s *= inv;
        acc.total_energy_j *= inv;
        acc.gee *= inv;
        acc.avg_reliability *= inv;
        acc.worst_reliability *= inv;
        acc.avg_fairness *= inv;
        acc.worst_fairness *= inv;
        acc.mean_selected_fitness *= inv;
        acc.mean_selected_count *= inv;
        SweepRow mean;
        mean.selector = name;
        mean.summary = acc;
        mean.error = "";
        mean.seed = 0;
        means.push_back(std::move(mean));
        mean_converged.push_back(static_cast<double>(converged_cells) / n);
    }

    std::string csv =
        "selector,seed,final_accuracy_pct,final_loss,convergence_time_s,converged,"
        "total_energy_j,gee,avg_reliability,worst_reliability,avg_fairness,worst_fairness,"
        "mean_selected_fitness,mean_selected_count,total_failures,aborted_rounds,error\n";
    auto emit = [&](const SweepRow& row, const std::string& seed_cell,
                    const std::string& converged_cell) {
        const auto& s = row.summary;
        csv += row.selector + "," + seed_cell + "," + fmt(s.final_accuracy_pct) + "," +
               fmt(s.final_loss) + "," + fmt(s.convergence_time_s) + "," + converged_cell +
               "," + fmt(s.total_energy_j) + "," + fmt(s.gee) + "," + fmt(s.avg_reliability) +
               "," + fmt(s.worst_reliability) + "," + fmt(s.avg_fairness) + "," +
               fmt(s.worst_fairness) + "," + fmt(s.mean_selected_fitness) + "," +
               fmt(s.mean_selected_count) + "," + std::to_string(s.total_failures) + "," +
               std::to_string(s.aborted_rounds) + "," + row.error + "\n";
    };
    for (const auto& row : out.rows)
        emit(row, std::to_string(row.seed), row.summary.converged ? "1" : "0");
    for (std::size_t m = 0; m < means.size(); ++m)
        emit(means[m], "mean", fmt(mean_converged[m]));
    out.table_path = (fs::path(out_dir) / "sweep.csv").string();
    write_file(out.table_path, csv);

    for (auto& m : means) out.rows.push_back(std::move(m));
    return out;
}

}  // namespace otafl::cli

#include "otafl/scenario.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "otafl/rng.hpp"

namespace otafl::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

const json* find(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(path + "." + key, "unknown field");
    }
}

double get_num(const json& j, const std::string& path, const char* key, double fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    const auto raw = v->get<std::int64_t>();
    if (raw < std::numeric_limits<int>::min() || raw > std::numeric_limits<int>::max())
        fail(path + "." + key, "integer out of range");
    return static_cast<int>(raw);
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned())
        fail(path + "." + key, "expected a non-negative integer");
    if (v->is_number_integer() && v->get<std::int64_t>() < 0)
        fail(path + "." + key, "expected a non-negative integer");
    return v->get<std::uint64_t>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(path + "." + key, "expected a string");
    return v->get<std::string>();
}

FieldRange get_range(const json& j, const std::string& path, const char* key,
                     FieldRange fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        fail(path + "." + key, "expected [lo, hi]");
    FieldRange r{(*v)[0].get<double>(), (*v)[1].get<double>()};
    if (r.lo > r.hi) fail(path + "." + key, "inverted range");
    return r;
}

json range_json(const FieldRange& r) { return json::array({r.lo, r.hi}); }

json generator_json(const GeneratorSpec& g) {
    json j;
    j["n"] = g.n;
    j["data_size"] = range_json(g.data_size);
    j["cycles_per_sample"] = range_json(g.cycles_per_sample);
    j["cpu_freq"] = range_json(g.cpu_freq);
    j["cpu_headroom"] = range_json(g.cpu_headroom);
    j["iteration_factor"] = range_json(g.iteration_factor);
    j["target_accuracy"] = range_json(g.target_accuracy);
    j["energy_coeff"] = range_json(g.energy_coeff);
    j["tx_power"] = range_json(g.tx_power);
    j["power_headroom"] = range_json(g.power_headroom);
    j["bandwidth"] = range_json(g.bandwidth);
    j["channel_gain"] = range_json(g.channel_gain);
    j["max_failures"] = g.max_failures;
    j["delay_budget"] = range_json(g.delay_budget);
    j["energy_budget"] = range_json(g.energy_budget);
    j["min_selection_fraction"] = range_json(g.min_selection_fraction);
    j["bandwidth_inflation"] = g.bandwidth_inflation;
    return j;
}

GeneratorSpec generator_from(const json& j, const std::string& path) {
    check_keys(j, path,
               {"n", "data_size", "cycles_per_sample", "cpu_freq", "cpu_headroom",
                "iteration_factor", "target_accuracy", "energy_coeff", "tx_power",
                "power_headroom", "bandwidth", "channel_gain", "max_failures", "delay_budget",
                "energy_budget", "min_selection_fraction", "bandwidth_inflation"});
    GeneratorSpec g;
    g.n = get_int(j, path, "n", g.n);
    if (g.n < 1) fail(path + ".n", "must be >= 1");
    g.data_size = get_range(j, path, "data_size", g.data_size);
    if (g.data_size.lo < 1.0) fail(path + ".data_size", "must start at >= 1 sample");
    g.cycles_per_sample = get_range(j, path, "cycles_per_sample", g.cycles_per_sample);
    g.cpu_freq = get_range(j, path, "cpu_freq", g.cpu_freq);
    g.cpu_headroom = get_range(j, path, "cpu_headroom", g.cpu_headroom);
    g.iteration_factor = get_range(j, path, "iteration_factor", g.iteration_factor);
    g.target_accuracy = get_range(j, path, "target_accuracy", g.target_accuracy);
    g.energy_coeff = get_range(j, path, "energy_coeff", g.energy_coeff);
    g.tx_power = get_range(j, path, "tx_power", g.tx_power);
    g.power_headroom = get_range(j, path, "power_headroom", g.power_headroom);
    g.bandwidth = get_range(j, path, "bandwidth", g.bandwidth);
    g.channel_gain = get_range(j, path, "channel_gain", g.channel_gain);
    g.max_failures = get_int(j, path, "max_failures", g.max_failures);
    if (g.max_failures < 0) fail(path + ".max_failures", "must be >= 0");
    g.delay_budget = get_range(j, path, "delay_budget", g.delay_budget);
    g.energy_budget = get_range(j, path, "energy_budget", g.energy_budget);
    g.min_selection_fraction = get_range(j, path, "min_selection_fraction",
                                         g.min_selection_fraction);
    g.bandwidth_inflation = get_num(j, path, "bandwidth_inflation", g.bandwidth_inflation);
    if (!(g.bandwidth_inflation > 0.0)) fail(path + ".bandwidth_inflation", "must be > 0");
    return g;
}

json profile_json(const domain::ClientProfile& p) {
    json j;
    j["id"] = p.id;
    j["data_size"] = p.data_size;
    j["cycles_per_sample"] = p.cycles_per_sample;
    j["cpu_freq"] = p.cpu_freq;
    j["cpu_freq_max"] = p.cpu_freq_max;
    j["iteration_factor"] = p.iteration_factor;
    j["target_accuracy"] = p.target_accuracy;
    j["energy_coeff"] = p.energy_coeff;
    j["tx_power"] = p.tx_power;
    j["tx_power_max"] = p.tx_power_max;
    j["bandwidth"] = p.bandwidth;
    j["channel_gain"] = p.channel_gain;
    j["failure_count"] = p.failure_count;
    j["delay_budget"] = p.delay_budget;
    j["energy_budget"] = p.energy_budget;
    j["min_selection_fraction"] = p.min_selection_fraction;
    j["historical_loss"] = p.historical_loss;
    return j;
}

domain::ClientProfile profile_from(const json& j, const std::string& path) {
    check_keys(j, path,
               {"id", "data_size", "cycles_per_sample", "cpu_freq", "cpu_freq_max",
                "iteration_factor", "target_accuracy", "energy_coeff", "tx_power", "tx_power_max",
                "bandwidth", "channel_gain", "failure_count", "delay_budget", "energy_budget",
                "min_selection_fraction", "historical_loss"});
    domain::ClientProfile p;
    p.id = get_int(j, path, "id", p.id);
    p.data_size = get_int(j, path, "data_size", 1);
    p.cycles_per_sample = get_num(j, path, "cycles_per_sample", p.cycles_per_sample);
    p.cpu_freq = get_num(j, path, "cpu_freq", p.cpu_freq);
    p.cpu_freq_max = get_num(j, path, "cpu_freq_max", p.cpu_freq_max);
    p.iteration_factor = get_num(j, path, "iteration_factor", p.iteration_factor);
    p.target_accuracy = get_num(j, path, "target_accuracy", p.target_accuracy);
    p.energy_coeff = get_num(j, path, "energy_coeff", p.energy_coeff);
    p.tx_power = get_num(j, path, "tx_power", p.tx_power);
    p.tx_power_max = get_num(j, path, "tx_power_max", p.tx_power_max);
    p.bandwidth = get_num(j, path, "bandwidth", p.bandwidth);
    p.channel_gain = get_num(j, path, "channel_gain", p.channel_gain);
    p.failure_count = get_int(j, path, "failure_count", p.failure_count);
    p.delay_budget = get_num(j, path, "delay_budget", p.delay_budget);
    p.energy_budget = get_num(j, path, "energy_budget", p.energy_budget);
    p.min_selection_fraction = get_num(j, path, "min_selection_fraction",
                                       p.min_selection_fraction);
    p.historical_loss = get_num(j, path, "historical_loss", p.historical_loss);
    return p;
}

json selector_json(const SelectorSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    json params;
    switch (s.kind) {
        case SelectorKind::Gwo:
            params["population_size"] = s.gwo.population_size;
            params["max_iter"] = s.gwo.max_iter;
            params["decode_threshold"] = s.gwo.decode_threshold;
            break;
        case SelectorKind::Ga:
            params["population"] = s.ga.population;
            params["generations"] = s.ga.generations;
            params["crossover_rate"] = s.ga.crossover_rate;
            params["mutation_rate"] = s.ga.mutation_rate;
            params["tournament"] = s.ga.tournament;
            break;
        case SelectorKind::Dp:
            params["capacity"] = s.dp.capacity;
            params["bins"] = s.dp.bins;
            break;
        case SelectorKind::Mab:
            params["cardinality"] = s.mab.cardinality;
            break;
        case SelectorKind::Random:
            params["k"] = s.random_k;
            break;
    }
    j["params"] = params;
    return j;
}

SelectorSpec selector_from(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "params"});
    SelectorSpec s;
    const json* kind = find(j, "kind");
    if (kind == nullptr) fail(path + ".kind", "missing required field");
    if (!kind->is_string()) fail(path + ".kind", "expected a string");
    const auto parsed = selector_from_string(kind->get<std::string>());
    if (!parsed) fail(path + ".kind", "unknown selector: " + kind->get<std::string>());
    s.kind = *parsed;

    const json* pv = find(j, "params");
    const json empty = json::object();
    const json& p = pv == nullptr ? empty : *pv;
    const std::string pp = path + ".params";
    switch (s.kind) {
        case SelectorKind::Gwo:
            check_keys(p, pp, {"population_size", "max_iter", "decode_threshold"});
            s.gwo.population_size = get_int(p, pp, "population_size", s.gwo.population_size);
            s.gwo.max_iter = get_int(p, pp, "max_iter", s.gwo.max_iter);
            s.gwo.decode_threshold = get_num(p, pp, "decode_threshold", s.gwo.decode_threshold);
            if (!s.gwo.valid()) fail(pp, "invalid GWO parameters");
            break;
        case SelectorKind::Ga:
            check_keys(p, pp,
                       {"population", "generations", "crossover_rate", "mutation_rate",
                        "tournament"});
            s.ga.population = get_int(p, pp, "population", s.ga.population);
            s.ga.generations = get_int(p, pp, "generations", s.ga.generations);
            s.ga.crossover_rate = get_num(p, pp, "crossover_rate", s.ga.crossover_rate);
            s.ga.mutation_rate = get_num(p, pp, "mutation_rate", s.ga.mutation_rate);
            s.ga.tournament = get_int(p, pp, "tournament", s.ga.tournament);
            break;
        case SelectorKind::Dp:
            check_keys(p, pp, {"capacity", "bins"});
            s.dp.capacity = get_num(p, pp, "capacity", s.dp.capacity);
            s.dp.bins = get_int(p, pp, "bins", s.dp.bins);
            if (s.dp.bins < 1) fail(pp + ".bins", "must be >= 1");
            break;
        case SelectorKind::Mab:
            check_keys(p, pp, {"cardinality"});
            s.mab.cardinality = get_int(p, pp, "cardinality", s.mab.cardinality);
            break;
        case SelectorKind::Random:
            check_keys(p, pp, {"k"});
            s.random_k = get_int(p, pp, "k", s.random_k);
            if (s.random_k < 1) fail(pp + ".k", "must be >= 1");
            break;
    }
    return s;
}

}  // namespace

const char* to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::Gwo: return "gwo";
        case SelectorKind::Ga: return "ga";
        case SelectorKind::Dp: return "dp";
        case SelectorKind::Mab: return "mab";
        case SelectorKind::Random: return "random";
    }
    return "gwo";
}

std::optional<SelectorKind> selector_from_string(const std::string& s) {
    if (s == "gwo") return SelectorKind::Gwo;
    if (s == "ga") return SelectorKind::Ga;
    if (s == "dp") return SelectorKind::Dp;
    if (s == "mab") return SelectorKind::Mab;
    if (s == "random") return SelectorKind::Random;
    return std::nullopt;
}

std::vector<domain::ClientProfile> generate_fleet(const GeneratorSpec& gen, int num_classes,
                                                  std::uint64_t seed) {
    if (num_classes < 2) throw ScenarioError("generate_fleet: num_classes must be >= 2");
    Rng rng(derive_seed(seed, {kFleetStreamTag}));
    std::vector<domain::ClientProfile> fleet;
    fleet.reserve(static_cast<std::size_t>(gen.n));
    for (int i = 0; i < gen.n; ++i) {
        domain::ClientProfile p;
        p.id = i;
        p.data_size = rng.uniform_int(static_cast<std::int64_t>(gen.data_size.lo),
                                      static_cast<std::int64_t>(gen.data_size.hi));
        p.cycles_per_sample = rng.uniform(gen.cycles_per_sample.lo, gen.cycles_per_sample.hi);
        p.cpu_freq = rng.uniform(gen.cpu_freq.lo, gen.cpu_freq.hi);
        p.cpu_freq_max = p.cpu_freq * rng.uniform(gen.cpu_headroom.lo, gen.cpu_headroom.hi);
        p.iteration_factor = rng.uniform(gen.iteration_factor.lo, gen.iteration_factor.hi);
        p.target_accuracy = rng.uniform(gen.target_accuracy.lo, gen.target_accuracy.hi);
        p.energy_coeff = rng.uniform(gen.energy_coeff.lo, gen.energy_coeff.hi);
        p.tx_power = rng.uniform(gen.tx_power.lo, gen.tx_power.hi);
        p.tx_power_max = p.tx_power * rng.uniform(gen.power_headroom.lo, gen.power_headroom.hi);
        p.bandwidth = rng.uniform(gen.bandwidth.lo, gen.bandwidth.hi);
        p.channel_gain = rng.uniform(gen.channel_gain.lo, gen.channel_gain.hi);
        p.failure_count = static_cast<int>(rng.uniform_int(0, gen.max_failures));
        p.delay_budget = rng.uniform(gen.delay_budget.lo, gen.delay_budget.hi);
        p.energy_budget = rng.uniform(gen.energy_budget.lo, gen.energy_budget.hi);
        p.min_selection_fraction = rng.uniform(gen.min_selection_fraction.lo,
                                               gen.min_selection_fraction.hi);
        p.historical_loss = std::log(static_cast<double>(num_classes));
        fleet.push_back(p);
    }
    return fleet;
}

void materialize_fleet(ScenarioConfig& cfg) {
    if (!cfg.fleet.empty() || !cfg.generator.has_value()) return;
    cfg.fleet = generate_fleet(*cfg.generator, cfg.trainer.num_classes, cfg.sys.master_seed);
    double sum_b = 0.0;
    for (const auto& p : cfg.fleet) sum_b += p.bandwidth;
    cfg.sys.total_bandwidth = sum_b / cfg.generator->bandwidth_inflation;
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.generator = GeneratorSpec{};
    cfg.sys.min_reliability = 0.05;
    cfg.sys.total_rounds = 30;
    cfg.trainer.kind = fl_sim::ModelKind::SoftmaxRegression;
    cfg.trainer.epochs = 2;
    cfg.trainer.learning_rate = 0.1;
    cfg.trainer.batch_size = 32;
    cfg.trainer.num_classes = 5;
    return cfg;
}

std::string to_json(const ScenarioConfig& cfg) {
    json j;
    json sys;
    sys["noise_psd"] = cfg.sys.noise_psd;
    sys["total_bandwidth"] = cfg.sys.total_bandwidth;
    sys["model_size_bits"] = cfg.sys.model_size_bits;
    sys["min_reliability"] = cfg.sys.min_reliability;
    sys["min_accuracy"] = cfg.sys.min_accuracy;
    sys["total_rounds"] = cfg.sys.total_rounds;
    sys["ota_snr_db"] = cfg.sys.ota_snr_db.has_value() ? json(*cfg.sys.ota_snr_db) : json();
    sys["selection_timing"] = domain::to_string(cfg.sys.selection_timing);
    sys["master_seed"] = cfg.sys.master_seed;
    j["system"] = sys;

    json fleet;
    if (cfg.generator.has_value()) fleet["generator"] = generator_json(*cfg.generator);
    if (!cfg.fleet.empty()) {
        json profiles = json::array();
        for (const auto& p : cfg.fleet) profiles.push_back(profile_json(p));
        fleet["profiles"] = profiles;
    }
    j["fleet"] = fleet;

    json trainer;
    trainer["model"] = fl_sim::to_string(cfg.trainer.kind);
    trainer["epochs"] = cfg.trainer.epochs;
    trainer["learning_rate"] = cfg.trainer.learning_rate;
    trainer["batch_size"] = cfg.trainer.batch_size;
    trainer["num_classes"] = cfg.trainer.num_classes;
    trainer["hidden_units"] = cfg.trainer.hidden_units;
    j["trainer"] = trainer;

    json data;
    data["feature_dim"] = cfg.data.feature_dim;
    data["class_separation"] = cfg.data.class_separation;
    data["noise_std"] = cfg.data.noise_std;
    data["dirichlet_alpha"] = cfg.data.dirichlet_alpha;
    data["test_fraction"] = cfg.data.test_fraction;
    j["data"] = data;

    j["selector"] = selector_json(cfg.selector);

    json weights;
    weights["loss"] = cfg.weights.loss;
    weights["delay"] = cfg.weights.delay;
    weights["energy"] = cfg.weights.energy;
    weights["reliability"] = cfg.weights.reliability;
    weights["fairness"] = cfg.weights.fairness;
    weights["penalty_coeff"] = cfg.weights.penalty_coeff;
    j["weights"] = weights;

    json met;
    met["convergence_epsilon"] = cfg.convergence.epsilon;
    met["convergence_window"] = cfg.convergence.window;
    j["metrics"] = met;

    json output;
    output["dir"] = cfg.out_dir;
    j["output"] = output;

    return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("config parse error: ") + e.what());
    }
    check_keys(j, "config",
               {"system", "fleet", "trainer", "data", "selector", "weights", "metrics",
                "output"});
    ScenarioConfig cfg;

    if (const json* sys = find(j, "system")) {
        const std::string path = "system";
        check_keys(*sys, path,
                   {"noise_psd", "total_bandwidth", "model_size_bits", "min_reliability",
                    "min_accuracy", "total_rounds", "ota_snr_db", "selection_timing",
                    "master_seed"});
        cfg.sys.noise_psd = get_num(*sys, path, "noise_psd", cfg.sys.noise_psd);
        cfg.sys.total_bandwidth = get_num(*sys, path, "total_bandwidth", cfg.sys.total_bandwidth);
        cfg.sys.model_size_bits = get_num(*sys, path, "model_size_bits", cfg.sys.model_size_bits);
        cfg.sys.min_reliability = get_num(*sys, path, "min_reliability", cfg.sys.min_reliability);
        cfg.sys.min_accuracy = get_num(*sys, path, "min_accuracy", cfg.sys.min_accuracy);
        cfg.sys.total_rounds = get_int(*sys, path, "total_rounds", cfg.sys.total_rounds);
        if (const json* snr = find(*sys, "ota_snr_db")) {
            if (snr->is_null())
                cfg.sys.ota_snr_db.reset();
            else if (snr->is_number())
                cfg.sys.ota_snr_db = snr->get<double>();
            else
                fail("system.ota_snr_db", "expected a number or null");
        }
        const std::string timing = get_str(*sys, path, "selection_timing",
                                           domain::to_string(cfg.sys.selection_timing));
        const auto parsed = domain::timing_from_string(timing);
        if (!parsed) fail("system.selection_timing", "unknown timing: " + timing);
        cfg.sys.selection_timing = *parsed;
        cfg.sys.master_seed = get_u64(*sys, path, "master_seed", cfg.sys.master_seed);
        if (cfg.sys.total_rounds < 1) fail("system.total_rounds", "must be >= 1");
        if (!(cfg.sys.noise_psd > 0.0)) fail("system.noise_psd", "must be > 0");
        if (!(cfg.sys.total_bandwidth > 0.0)) fail("system.total_bandwidth", "must be > 0");
        if (cfg.sys.min_reliability < 0.0 || cfg.sys.min_reliability > 1.0)
            fail("system.min_reliability", "must be in [0, 1]");
        if (!(cfg.sys.min_accuracy > 0.0) || cfg.sys.min_accuracy > 1.0)
            fail("system.min_accuracy", "must be in (0, 1]");
    }

    const json* fleet = find(j, "fleet");
    if (fleet == nullptr) fail("fleet", "missing required field");
    check_keys(*fleet, "fleet", {"generator", "profiles"});
    if (const json* gen = find(*fleet, "generator"))
        cfg.generator = generator_from(*gen, "fleet.generator");
    if (const json* profiles = find(*fleet, "profiles")) {
        if (!profiles->is_array()) fail("fleet.profiles", "expected an array");
        for (std::size_t i = 0; i < profiles->size(); ++i)
            cfg.fleet.push_back(profile_from((*profiles)[i],
                                             "fleet.profiles[" + std::to_string(i) + "]"));
    }
    if (!cfg.generator.has_value() && cfg.fleet.empty())
        fail("fleet", "needs a generator block or explicit profiles");

    if (const json* trainer = find(j, "trainer")) {
        const std::string path = "trainer";
        check_keys(*trainer, path,
                   {"model", "epochs", "learning_rate", "batch_size", "num_classes",
                    "hidden_units"});
        const std::string model = get_str(*trainer, path, "model",
                                          fl_sim::to_string(cfg.trainer.kind));
        try {
            cfg.trainer.kind = fl_sim::model_kind_from_string(model);
        } catch (const std::invalid_argument& e) {
            fail("trainer.model", e.what());
        }
        cfg.trainer.epochs = get_int(*trainer, path, "epochs", cfg.trainer.epochs);
        cfg.trainer.learning_rate = get_num(*trainer, path, "learning_rate",
                                            cfg.trainer.learning_rate);
        cfg.trainer.batch_size = get_int(*trainer, path, "batch_size", cfg.trainer.batch_size);
        cfg.trainer.num_classes = get_int(*trainer, path, "num_classes", cfg.trainer.num_classes);
        cfg.trainer.hidden_units = get_int(*trainer, path, "hidden_units",
                                           cfg.trainer.hidden_units);
        if (!cfg.trainer.valid()) fail("trainer", "invalid trainer parameters");
    }

    if (const json* data = find(j, "data")) {
        const std::string path = "data";
        check_keys(*data, path,
                   {"feature_dim", "class_separation", "noise_std", "dirichlet_alpha",
                    "test_fraction"});
        cfg.data.feature_dim = get_int(*data, path, "feature_dim", cfg.data.feature_dim);
        cfg.data.class_separation = get_num(*data, path, "class_separation",
                                            cfg.data.class_separation);
        cfg.data.noise_std = get_num(*data, path, "noise_std", cfg.data.noise_std);
        cfg.data.dirichlet_alpha = get_num(*data, path, "dirichlet_alpha",
                                           cfg.data.dirichlet_alpha);
        cfg.data.test_fraction = get_num(*data, path, "test_fraction", cfg.data.test_fraction);
        if (cfg.data.feature_dim < 1) fail("data.feature_dim", "must be >= 1");
        if (!(cfg.data.dirichlet_alpha > 0.0)) fail("data.dirichlet_alpha", "must be > 0");
        if (!(cfg.data.test_fraction > 0.0) || cfg.data.test_fraction >= 1.0)
            fail("data.test_fraction", "must be in (0, 1)");
        if (cfg.data.class_separation < 0.0) fail("data.class_separation", "must be >= 0");
        if (cfg.data.noise_std < 0.0) fail("data.noise_std", "must be >= 0");
    }

    if (const json* selector = find(j, "selector"))
        cfg.selector = selector_from(*selector, "selector");

    if (const json* weights = find(j, "weights")) {
        const std::string path = "weights";
        check_keys(*weights, path,
                   {"loss", "delay", "energy", "reliability", "fairness", "penalty_coeff"});
        cfg.weights.loss = get_num(*weights, path, "loss", cfg.weights.loss);
        cfg.weights.delay = get_num(*weights, path, "delay", cfg.weights.delay);
        cfg.weights.energy = get_num(*weights, path, "energy", cfg.weights.energy);
        cfg.weights.reliability = get_num(*weights, path, "reliability", cfg.weights.reliability);
        cfg.weights.fairness = get_num(*weights, path, "fairness", cfg.weights.fairness);
        cfg.weights.penalty_coeff = get_num(*weights, path, "penalty_coeff",
                                            cfg.weights.penalty_coeff);
        if (!cfg.weights.valid())
            fail("weights", "must be non-negative and sum to 1 (penalty_coeff > 0)");
    }

    if (const json* met = find(j, "metrics")) {
        const std::string path = "metrics";
        check_keys(*met, path, {"convergence_epsilon", "convergence_window"});
        cfg.convergence.epsilon = get_num(*met, path, "convergence_epsilon",
                                          cfg.convergence.epsilon);
        cfg.convergence.window = get_int(*met, path, "convergence_window",
                                         cfg.convergence.window);
        if (!(cfg.convergence.epsilon > 0.0)) fail("metrics.convergence_epsilon", "must be > 0");
        if (cfg.convergence.window < 1) fail("metrics.convergence_window", "must be >= 1");
    }

    if (const json* output = find(j, "output")) {
        check_keys(*output, "output", {"dir"});
        cfg.out_dir = get_str(*output, "output", "dir", cfg.out_dir);
    }

    return cfg;
}

}  // namespace otafl::cli

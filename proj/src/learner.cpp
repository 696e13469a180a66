#include "otafl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otafl/rng.hpp"

namespace otafl::fl_sim {

namespace {

constexpr std::uint64_t kInitStreamTag = 0x171;
constexpr std::uint64_t kDirichletStreamTag = 0xD1;
constexpr std::uint64_t kPoolStreamTag = 0xD2;
constexpr std::uint64_t kTrainStreamTag = 0x7247;

void shuffle_in_place(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(v.size()) - 1));
        std::swap(v[i], v[j]);
    }
}

// Fills `logits` (and `hidden` for the MLP) for one sample.
void forward_logits(const GlobalModel& m, const double* x, std::vector<double>& hidden,
                    std::vector<double>& logits) {
    const std::size_t d = static_cast<std::size_t>(m.feature_dim);
    const std::size_t K = static_cast<std::size_t>(m.num_classes);
    logits.assign(K, 0.0);
    if (m.kind == ModelKind::SoftmaxRegression) {
        for (std::size_t k = 0; k < K; ++k) {
            double z = m.w[K * d + k];  // bias
            const double* row = m.w.data() + k * d;
            for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
            logits[k] = z;
        }
        return;
    }
    const std::size_t H = static_cast<std::size_t>(m.hidden_units);
    const std::size_t b1_off = H * d;
    const std::size_t w2_off = b1_off + H;
    const std::size_t b2_off = w2_off + K * H;
    hidden.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        double a = m.w[b1_off + h];
        const double* row = m.w.data() + h * d;
        for (std::size_t j = 0; j < d; ++j) a += row[j] * x[j];
        hidden[h] = std::tanh(a);
    }
    for (std::size_t k = 0; k < K; ++k) {
        double z = m.w[b2_off + k];
        const double* row = m.w.data() + w2_off + k * H;
        for (std::size_t h = 0; h < H; ++h) z += row[h] * hidden[h];
        logits[k] = z;
    }
}

double log_sum_exp(const std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - zmax);
    return zmax + std::log(s);
}

// Cross-entropy of one sample with the probability floor applied.
double sample_loss(const std::vector<double>& logits, int label) {
    const double ce = log_sum_exp(logits) - logits[static_cast<std::size_t>(label)];
    return std::min(ce, -std::log(kProbabilityFloor));
}

void check_dims(const GlobalModel& m, const LocalDataset& data) {
    if (m.feature_dim != data.feature_dim)
        throw std::invalid_argument("model/dataset feature dimensions disagree");
    if (m.w.size() != m.param_count())
        throw std::invalid_argument("model parameter vector has the wrong length");
    for (int y : data.labels)
        if (y < 0 || y >= m.num_classes)
            throw std::invalid_argument("dataset label outside [0, num_classes)");
}

}  // namespace

std::string to_string(ModelKind kind) {
    return kind == ModelKind::SoftmaxRegression ? "softmax" : "mlp";
}

ModelKind model_kind_from_string(const std::string& text) {
    if (text == "softmax") return ModelKind::SoftmaxRegression;
    if (text == "mlp") return ModelKind::OneHiddenLayerMlp;
    throw std::invalid_argument("unknown model kind: " + text);
}

bool TrainerConfig::valid() const {
    return epochs >= 1 && learning_rate > 0.0 && batch_size >= 1 && num_classes >= 2 &&
           hidden_units >= 1;
}

LocalDataset make_synthetic_dataset(const SyntheticDataSpec& spec) {
    if (spec.num_classes < 2 || spec.feature_dim < 1 || spec.total_samples < 1 ||
        spec.noise_std < 0.0)
        throw std::invalid_argument("invalid synthetic data spec");
    const std::size_t K = static_cast<std::size_t>(spec.num_classes);
    const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
    const std::size_t N = static_cast<std::size_t>(spec.total_samples);

    Rng rng(spec.seed);
    std::vector<double> centers(K * d);
    for (double& c : centers) c = spec.class_separation * rng.normal();

    LocalDataset out;
    out.feature_dim = spec.feature_dim;
    out.owner = -1;
    out.features.resize(N * d);
    out.labels.resize(N);
    for (std::size_t s = 0; s < N; ++s) {
        const std::size_t k = s % K;
        out.labels[s] = static_cast<int>(k);
        for (std::size_t j = 0; j < d; ++j)
            out.features[s * d + j] = centers[k * d + j] + spec.noise_std * rng.normal();
    }
    return out;
}

std::vector<LocalDataset> partition_data(const LocalDataset& source,
                                         const std::vector<domain::ClientProfile>& fleet,
                                         double dirichlet_alpha, std::uint64_t seed) {
    if (dirichlet_alpha <= 0.0) throw std::invalid_argument("dirichlet_alpha must be positive");
    if (source.feature_dim < 1 || source.size() == 0)
        throw std::invalid_argument("partition_data: empty source dataset");
    std::size_t demand = 0;
    for (const auto& p : fleet) demand += static_cast<std::size_t>(p.data_size);
    if (demand > source.size())
        throw std::runtime_error("partition_data: insufficient samples (" +
                                 std::to_string(demand) + " requested, " +
                                 std::to_string(source.size()) + " available)");

    int num_classes = 0;
    for (int y : source.labels) num_classes = std::max(num_classes, y + 1);
    const std::size_t K = static_cast<std::size_t>(num_classes);

    // Per-class index pools, each independently shuffled; a cursor per pool
    // turns "take m samples of class k" into a range pop.
    std::vector<std::vector<std::size_t>> pools(K);
    for (std::size_t s = 0; s < source.size(); ++s)
        pools[static_cast<std::size_t>(source.labels[s])].push_back(s);
    for (std::size_t k = 0; k < K; ++k) {
        Rng pool_rng(derive_seed(seed, {kPoolStreamTag, static_cast<std::uint64_t>(k)}));
        shuffle_in_place(pools[k], pool_rng);
    }
    std::vector<std::size_t> cursor(K, 0);
    auto remaining = [&](std::size_t k) { return pools[k].size() - cursor[k]; };

    const std::size_t d = static_cast<std::size_t>(source.feature_dim);
    std::vector<LocalDataset> out(fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const std::size_t Di = static_cast<std::size_t>(fleet[i].data_size);
        Rng cli_rng(derive_seed(seed, {kDirichletStreamTag, static_cast<std::uint64_t>(i)}));
        const std::vector<double> q = cli_rng.dirichlet(dirichlet_alpha, static_cast<int>(K));

        // Largest-remainder rounding of q * Di into integer per-class targets.
        std::vector<std::size_t> target(K, 0);
        std::vector<std::pair<double, std::size_t>> frac(K);
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const double want = q[k] * static_cast<double>(Di);
            target[k] = static_cast<std::size_t>(std::floor(want));
            frac[k] = {want - std::floor(want), k};
            assigned += target[k];
        }
        std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; assigned < Di; ++r, ++assigned) ++target[frac[r % K].second];

        std::vector<std::size_t> rows;
        rows.reserve(Di);
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t take = std::min(target[k], remaining(k));
            for (std::size_t m = 0; m < take; ++m) rows.push_back(pools[k][cursor[k]++]);
        }
        // Pool shortfalls: top up one sample at a time from the class with the
        // most left, so every client still gets exactly data_size samples.
        while (rows.size() < Di) {
            std::size_t best = K;
            for (std::size_t k = 0; k < K; ++k)
                if (remaining(k) > 0 && (best == K || remaining(k) > remaining(best))) best = k;
            if (best == K)
                throw std::logic_error("partition_data: pools exhausted despite size check");
            rows.push_back(pools[best][cursor[best]++]);
        }

        LocalDataset& dst = out[i];
        dst.feature_dim = source.feature_dim;
        dst.owner = static_cast<int>(i);
        dst.labels.reserve(Di);
        dst.features.reserve(Di * d);
        for (std::size_t s : rows) {
            dst.labels.push_back(source.labels[s]);
            const double* x = source.row(s);
            dst.features.insert(dst.features.end(), x, x + d);
        }
    }
    return out;
}

std::size_t GlobalModel::param_count() const {
    const std::size_t d = static_cast<std::size_t>(feature_dim);
    const std::size_t K = static_cast<std::size_t>(num_classes);
    if (kind == ModelKind::SoftmaxRegression) return K * (d + 1);
    const std::size_t H = static_cast<std::size_t>(hidden_units);
    return H * d + H + K * H + K;
}

GlobalModel init_model(const TrainerConfig& tcfg, int feature_dim) {
    if (feature_dim < 1 || tcfg.num_classes < 2 || tcfg.hidden_units < 1)
        throw std::invalid_argument("init_model: bad dimensions");
    GlobalModel m;
    m.kind = tcfg.kind;
    m.feature_dim = feature_dim;
    m.num_classes = tcfg.num_classes;
    m.hidden_units = tcfg.kind == ModelKind::OneHiddenLayerMlp ? tcfg.hidden_units : 0;
    m.w.assign(m.param_count(), 0.0);
    if (tcfg.kind == ModelKind::OneHiddenLayerMlp) {
        // Zero weights would freeze the tanh layer (zero activations and zero
        // upstream gradient), so draw small seeded uniform weights instead;
        // biases stay zero.
        Rng rng(derive_seed(tcfg.seed, {kInitStreamTag}));
        const std::size_t d = static_cast<std::size_t>(feature_dim);
        const std::size_t H = static_cast<std::size_t>(tcfg.hidden_units);
        const std::size_t K = static_cast<std::size_t>(tcfg.num_classes);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(H));
        for (std::size_t idx = 0; idx < H * d; ++idx) m.w[idx] = rng.uniform(-s1, s1);
        const std::size_t w2_off = H * d + H;
        for (std::size_t idx = 0; idx < K * H; ++idx) m.w[w2_off + idx] = rng.uniform(-s2, s2);
    }
    return m;
}

double local_loss(const GlobalModel& model, const LocalDataset& data) {
    check_dims(model, data);
    if (data.size() == 0) throw std::invalid_argument("local_loss: empty dataset");
    std::vector<double> hidden, logits;
    double total = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        forward_logits(model, data.row(s), hidden, logits);
        total += sample_loss(logits, data.labels[s]);
    }
    return total / static_cast<double>(data.size());
}

EvalResult evaluate(const GlobalModel& model, const LocalDataset& data) {
    check_dims(model, data);
    if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<double> hidden, logits;
    double total = 0.0;
    std::size_t correct = 0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        forward_logits(model, data.row(s), hidden, logits);
        total += sample_loss(logits, data.labels[s]);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < logits.size(); ++k)
            if (logits[k] > logits[arg]) arg = k;
        if (static_cast<int>(arg) == data.labels[s]) ++correct;
    }
    EvalResult r;
    r.loss = total / static_cast<double>(data.size());
    r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return r;
}

double batch_loss(const GlobalModel& model, const LocalDataset& data,
                  const std::vector<std::size_t>& batch) {
    check_dims(model, data);
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    std::vector<double> hidden, logits;
    double total = 0.0;
    for (std::size_t s : batch) {
        forward_logits(model, data.row(s), hidden, logits);
        total += sample_loss(logits, data.labels[s]);
    }
    return total / static_cast<double>(batch.size());
}

std::vector<double> loss_gradient(const GlobalModel& model, const LocalDataset& data,
                                  const std::vector<std::size_t>& batch) {
    check_dims(model, data);
    if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
    const std::size_t d = static_cast<std::size_t>(model.feature_dim);
    const std::size_t K = static_cast<std::size_t>(model.num_classes);
    std::vector<double> grad(model.param_count(), 0.0);
    std::vector<double> hidden, logits;
    const double inv = 1.0 / static_cast<double>(batch.size());

    for (std::size_t s : batch) {
        const double* x = data.row(s);
        forward_logits(model, x, hidden, logits);
        const double lse = log_sum_exp(logits);
        // dL/dz_k = p_k - [k == y]
        std::vector<double> gz(K);
        for (std::size_t k = 0; k < K; ++k) gz[k] = std::exp(logits[k] - lse);
        gz[static_cast<std::size_t>(data.labels[s])] -= 1.0;

        if (model.kind == ModelKind::SoftmaxRegression) {
            for (std::size_t k = 0; k < K; ++k) {
                const double g = gz[k] * inv;
                double* row = grad.data() + k * d;
                for (std::size_t j = 0; j < d; ++j) row[j] += g * x[j];
                grad[K * d + k] += g;
            }
            continue;
        }

        const std::size_t H = static_cast<std::size_t>(model.hidden_units);
        const std::size_t b1_off = H * d;
        const std::size_t w2_off = b1_off + H;
        const std::size_t b2_off = w2_off + K * H;
        std::vector<double> gh(H, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const double g = gz[k] * inv;
            double* row = grad.data() + w2_off + k * H;
            const double* w2row = model.w.data() + w2_off + k * H;
            for (std::size_t h = 0; h < H; ++h) {
                row[h] += g * hidden[h];
                gh[h] += gz[k] * w2row[h];
            }
            grad[b2_off + k] += g;
        }
        for (std::size_t h = 0; h < H; ++h) {
            const double ga = gh[h] * (1.0 - hidden[h] * hidden[h]) * inv;
            double* row = grad.data() + h * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += ga * x[j];
            grad[b1_off + h] += ga;
        }
    }
    return grad;
}

LocalTrainResult local_train(const GlobalModel& model, const LocalDataset& data,
                             const TrainerConfig& tcfg, domain::ClientProfile* profile) {
    if (tcfg.epochs < 1 || tcfg.learning_rate < 0.0 || tcfg.batch_size < 1)
        throw std::invalid_argument("local_train: invalid trainer configuration");
    check_dims(model, data);
    if (data.size() == 0) throw std::invalid_argument("local_train: empty dataset");

    GlobalModel m = model;
    Rng rng(derive_seed(tcfg.seed, {kTrainStreamTag}));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double last_loss = std::numeric_limits<double>::quiet_NaN();
    const std::size_t B = static_cast<std::size_t>(tcfg.batch_size);
    std::vector<std::size_t> batch;
    for (int e = 0; e < tcfg.epochs; ++e) {
        shuffle_in_place(order, rng);
        for (std::size_t start = 0; start < order.size(); start += B) {
            const std::size_t stop = std::min(start + B, order.size());
            batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            last_loss = batch_loss(m, data, batch);
            if (!std::isfinite(last_loss)) {
                std::ostringstream msg;
                msg << "local training diverged for client " << data.owner
                    << " at learning rate " << tcfg.learning_rate;
                throw std::runtime_error(msg.str());
            }
            const std::vector<double> grad = loss_gradient(m, data, batch);
            for (std::size_t j = 0; j < m.w.size(); ++j)
                m.w[j] -= tcfg.learning_rate * grad[j];
        }
    }

    LocalTrainResult res;
    res.final_loss = last_loss;
    res.delta.resize(m.w.size());
    for (std::size_t j = 0; j < m.w.size(); ++j) res.delta[j] = m.w[j] - model.w[j];
    if (profile != nullptr)
        profile->historical_loss = kHistoricalLossEmaDecay * profile->historical_loss +
                                   (1.0 - kHistoricalLossEmaDecay) * res.final_loss;
    return res;
}

}  // namespace otafl::fl_sim

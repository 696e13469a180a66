#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "otafl/domain.hpp"

namespace otafl::fl_sim {

// Softmax probabilities are clamped below at this floor before the log, so a
// perfect predictor's loss is bounded by -ln(floor) instead of diverging.
inline constexpr double kProbabilityFloor = 1e-12;

// historical_loss <- decay * old + (1 - decay) * fresh, applied after every
// local training event.
inline constexpr double kHistoricalLossEmaDecay = 0.5;

enum class ModelKind { SoftmaxRegression, OneHiddenLayerMlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

struct TrainerConfig {
    ModelKind kind = ModelKind::SoftmaxRegression;
    int epochs = 1;
    double learning_rate = 0.05;
    int batch_size = 32;
    int num_classes = 3;
    int hidden_units = 16;  // MLP only
    std::uint64_t seed = 1;

    // epochs >= 1, learning_rate > 0, batch_size >= 1, num_classes >= 2,
    // hidden_units >= 1.
    bool valid() const;
};

// Row-major feature matrix plus integer labels. owner = -1 marks a dataset
// that belongs to no client (the source pool or the held-out test split).
struct LocalDataset {
    std::vector<double> features;  // size() == labels.size() * feature_dim
    std::vector<int> labels;
    int feature_dim = 0;
    int owner = -1;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t j) const {
        return features.data() + j * static_cast<std::size_t>(feature_dim);
    }
};

// Gaussian-mixture generator: one spherical Gaussian per class, centers drawn
// once from N(0, class_separation^2) per coordinate, samples at noise_std
// around their class center. Labels cycle 0,1,...,K-1 so class counts are
// balanced to within one sample.
struct SyntheticDataSpec {
    int num_classes = 3;
    int feature_dim = 8;
    int total_samples = 1000;
    double class_separation = 2.0;
    double noise_std = 1.0;
    std::uint64_t seed = 1;
};

LocalDataset make_synthetic_dataset(const SyntheticDataSpec& spec);

// Splits `source` into disjoint per-client datasets of exactly
// fleet[i].data_size samples each. Label mix per client follows a symmetric
// Dirichlet(alpha) draw turned into integer per-class targets by largest
// remainder; per-class pools are consumed in shuffled order, and any pool
// shortfall is topped up from the classes with the most samples left, so the
// size contract holds for every alpha. Throws when sum of data_size exceeds
// the source size.
std::vector<LocalDataset> partition_data(const LocalDataset& source,
                                         const std::vector<domain::ClientProfile>& fleet,
                                         double dirichlet_alpha, std::uint64_t seed);

// Flat parameter vector with the layout metadata needed to evaluate it.
// SoftmaxRegression: [W (K x d), b (K)]. OneHiddenLayerMlp (tanh hidden):
// [W1 (H x d), b1 (H), W2 (K x H), b2 (K)].
struct GlobalModel {
    ModelKind kind = ModelKind::SoftmaxRegression;
    int feature_dim = 0;
    int num_classes = 0;
    int hidden_units = 0;  // 0 for SoftmaxRegression
    std::vector<double> w;
    int version = 0;

    std::size_t param_count() const;
};

// Zero weights for softmax regression (a uniform predictor, loss exactly
// ln K); small seeded uniform weights for the MLP, which cannot escape an
// all-zero start.
GlobalModel init_model(const TrainerConfig& tcfg, int feature_dim);

// Mean cross-entropy over the dataset (Eq.-1-style per-client loss).
double local_loss(const GlobalModel& model, const LocalDataset& data);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;  // fraction in [0, 1]
};

// Mean cross-entropy plus argmax accuracy (ties resolve to the lowest class).
EvalResult evaluate(const GlobalModel& model, const LocalDataset& data);

// Mean cross-entropy over the given sample indices.
double batch_loss(const GlobalModel& model, const LocalDataset& data,
                  const std::vector<std::size_t>& batch);

// Batch-averaged analytic gradient of batch_loss with respect to model.w.
std::vector<double> loss_gradient(const GlobalModel& model, const LocalDataset& data,
                                  const std::vector<std::size_t>& batch);

struct LocalTrainResult {
    std::vector<double> delta;  // w_after - w_before
    double final_loss = 0.0;    // mean loss of the last mini-batch processed
};

// Mini-batch SGD for tcfg.epochs passes (shuffled each epoch, last partial
// batch included). When `profile` is given, its historical_loss is advanced
// by the EMA rule with the returned final loss. Throws on non-finite loss,
// naming the owner client and learning rate.
LocalTrainResult local_train(const GlobalModel& model, const LocalDataset& data,
                             const TrainerConfig& tcfg,
                             domain::ClientProfile* profile = nullptr);

}  // namespace otafl::fl_sim

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace specsense::learn {

enum class ModelKind { Logistic, Mlp };

struct ModelShape {
    ModelKind kind = ModelKind::Logistic;
    int n_inputs = 3;
    int n_hidden = 0; // MLP only

    // Logistic: n_inputs + 1. MLP: (n_inputs+1)*n_hidden + (n_hidden+1).
    std::size_t coef_count() const;
    bool operator==(const ModelShape&) const = default;
};

// Flat coefficient vector; the unit FedAvg exchanges. Order is fixed:
// Logistic [w..., b]; MLP [W1 row-major..., b1..., w2..., b2].
struct CoefVector {
    ModelShape shape;
    std::vector<double> values;
};

struct TrainConfig {
    double learning_rate = 0.5;
    int epochs_per_batch = 40;
    std::uint64_t init_seed = 1;
    double init_scale = 0.5;
};

struct Example {
    std::vector<double> x;
    int y = 0; // 0 or 1
};

void validate(const ModelShape& shape);
void validate(const TrainConfig& config);

// Logistic models start at zero (convex; deterministic optimum path). MLP
// weights are uniform in [-init_scale, init_scale] from init_seed, biases
// zero. Deterministic.
CoefVector init_model(const ModelShape& shape, const TrainConfig& config);

// Sigmoid output probability, clamped into (0,1) so downstream logs stay
// finite. Stable for |z| well past 500.
double predict(const CoefVector& model, std::span<const double> features);

int classify(const CoefVector& model, std::span<const double> features,
             double cutoff = 0.5);

// Mean binary cross-entropy over the batch.
double loss(const CoefVector& model, std::span<const Example> batch);

// Analytic gradient of the mean BCE loss, in codec order.
CoefVector gradient(const CoefVector& model, std::span<const Example> batch);

// epochs_per_batch full-batch gradient-descent passes over `batch`. If the
// final loss exceeds the starting loss the step is retried at half the
// learning rate, up to 8 halvings; as a last resort the input model is
// returned unchanged, so post-loss <= pre-loss always holds.
CoefVector train_batch(const CoefVector& model, std::span<const Example> batch,
                       const TrainConfig& config);

std::vector<double> flatten(const CoefVector& model);
CoefVector unflatten(const ModelShape& shape, std::span<const double> values);

double accuracy(const CoefVector& model, std::span<const Example> rows);

// Model file: JSON with fields kind, n_inputs, n_hidden, values, init_seed.
void save_model(const CoefVector& model, std::uint64_t init_seed,
                const std::filesystem::path& path);
struct LoadedModel {
    CoefVector model;
    std::uint64_t init_seed = 0;
};
LoadedModel load_model(const std::filesystem::path& path);

std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

} // namespace specsense::learn

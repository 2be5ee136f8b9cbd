#pragma once

#include "specsense/detect.hpp"
#include "specsense/featex.hpp"
#include "specsense/learn.hpp"
#include "specsense/types.hpp"

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

namespace specsense::fed {

struct SensorState {
    int sensor_id = 0;
    std::vector<FeatureRow> train_rows;
    std::vector<FeatureRow> test_rows;
    int batch_cursor = 0;
    learn::CoefVector fed_model;
    learn::CoefVector shadow_model; // same training, never aggregated
    bool faulty = false;
};

struct FedConfig {
    int n_sensors = 5;
    int n_rounds = 20;
    std::set<int> faulty_ids;
    std::uint64_t experiment_seed = 1;
    std::uint64_t shuffle_seed = 0; // 0 = derive from experiment_seed
    double train_fraction = 0.8;
    double outlier_z = 10.0;
    bool exclude_flagged = false; // flags are reported, not excluded, by default
    double pfa = 0.01;
    learn::TrainConfig train;
    learn::ModelShape shape;

    std::uint64_t effective_shuffle_seed() const;
};

void validate(const FedConfig& config);

struct SensorRound {
    int sensor_id = 0;
    double fed_accuracy = 0.0;
    double shadow_accuracy = 0.0;
    double coef_distance = 0.0;
    bool flagged = false;
};

struct RoundReport {
    int round = 0;
    std::vector<SensorRound> per_sensor;
    double mean_fed_accuracy = 0.0;
    double mean_shadow_accuracy = 0.0;
};

struct ExperimentReport {
    FedConfig config;
    double energy_threshold = 0.0;
    double energy_accuracy = 0.0;
    double centralized_logistic = 0.0;
    double centralized_mlp = 0.0;
    std::vector<RoundReport> rounds;
    double final_mean_fed = 0.0;
    double final_mean_shadow = 0.0;
};

// Deterministic shuffle + equal split into n_sensors subsets (remainder rows
// dropped), each subset split stratified-by-label into train/test. All
// sensors start from identical models.
std::vector<SensorState> partition_sensors(const std::vector<FeatureRow>& dataset,
                                           const FedConfig& config);

// n_rounds contiguous equal batches over the sensor's training rows, as
// [begin, end) index pairs; the remainder joins the last batch. Batch r is
// first revealed at round r.
std::vector<std::pair<std::size_t, std::size_t>> make_batches(const SensorState& sensor,
                                                              int n_rounds);

// Replaces every label with an independent fair coin flip. Features untouched.
std::vector<FeatureRow> corrupt_labels(const std::vector<FeatureRow>& batch,
                                       std::uint64_t seed);

// Element-wise arithmetic mean of coefficient vectors of identical shape.
learn::CoefVector fedavg(std::span<const learn::CoefVector> coefs);

struct OutlierReport {
    std::vector<double> distance; // Euclidean distance to coordinate-wise median
    std::vector<bool> flagged;
};

// Flags vectors whose distance to the coordinate-wise median exceeds
// median(d) + z * MAD(d); with MAD = 0, flags d > 10 * median(d).
OutlierReport detect_outliers(std::span<const learn::CoefVector> coefs, double outlier_z);

// Stratified K-fold index splits: (train, validation) per fold; folds are
// label-proportional within one row, disjoint, and exhaustive.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};
std::vector<Fold> stratified_kfold(const std::vector<FeatureRow>& dataset, int k,
                                   std::uint64_t seed);

// Drives one federated run: local training, outlier flagging, FedAvg,
// evaluation of federated and shadow models on the full pooled dataset.
class Experiment {
public:
    Experiment(const std::vector<FeatureRow>& dataset, const FedConfig& config);

    RoundReport run_round();
    ExperimentReport run_all();

    const std::vector<SensorState>& sensors() const { return sensors_; }
    const featex::NormStats& normalization() const { return norm_; }
    int rounds_done() const { return round_; }

private:
    std::vector<learn::Example> to_examples(const std::vector<FeatureRow>& rows) const;

    FedConfig cfg_;
    std::vector<FeatureRow> dataset_;
    std::vector<SensorState> sensors_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> batch_plans_;
    featex::NormStats norm_;
    std::vector<learn::Example> pooled_eval_;
    int round_ = 0;
};

ExperimentReport run_experiment(const std::vector<FeatureRow>& dataset,
                                const FedConfig& config);

} // namespace specsense::fed

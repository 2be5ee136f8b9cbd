#include "specsense/fed.hpp"

#include "specsense/errors.hpp"
#include "specsense/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace specsense::fed {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5F0F;
constexpr std::uint64_t kCorruptStream = 0xFA11;
constexpr std::uint64_t kFoldStream = 0xF01D;

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::uint64_t FedConfig::effective_shuffle_seed() const {
    return shuffle_seed != 0 ? shuffle_seed : derive_seed(experiment_seed, kShuffleStream);
}

void validate(const FedConfig& config) {
    if (config.n_sensors < 1) throw ConfigError("n_sensors must be >= 1");
    if (config.n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
    if (static_cast<int>(config.faulty_ids.size()) >= config.n_sensors)
        throw ConfigError("faulty_ids must leave at least one healthy sensor");
    for (int id : config.faulty_ids)
        if (id < 0 || id >= config.n_sensors)
            throw ConfigError("faulty sensor id out of range");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0, 1)");
    if (!(config.outlier_z > 0.0)) throw ConfigError("outlier_z must be > 0");
    if (!(config.pfa > 0.0 && config.pfa < 1.0)) throw ConfigError("pfa must be in (0, 1)");
    learn::validate(config.shape);
    learn::validate(config.train);
}

std::vector<SensorState> partition_sensors(const std::vector<FeatureRow>& dataset,
                                           const FedConfig& config) {
    validate(config);
    if (dataset.size() < static_cast<std::size_t>(config.n_sensors) * 10)
        throw DataError("dataset too small to partition");
    bool has0 = false, has1 = false;
    for (const auto& r : dataset) (r.label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw DataError("both labels must be present");

    // Deterministic Fisher-Yates shuffle of row indices.
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(config.effective_shuffle_seed());
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(order[i], order[j]);
    }

    const std::size_t per_sensor = dataset.size() / static_cast<std::size_t>(config.n_sensors);
    std::vector<SensorState> sensors;
    sensors.reserve(static_cast<std::size_t>(config.n_sensors));
    const learn::CoefVector init = learn::init_model(config.shape, config.train);

    for (int s = 0; s < config.n_sensors; ++s) {
        std::vector<FeatureRow> subset;
        subset.reserve(per_sensor);
        for (std::size_t i = 0; i < per_sensor; ++i)
            subset.push_back(dataset[order[static_cast<std::size_t>(s) * per_sensor + i]]);

        // Stratified split: the label-0 train count is rounded, the label-1
        // count tops the total up to round(subset * fraction), so subset
        // train sizes are identical across sensors.
        std::size_t c0 = 0;
        for (const auto& r : subset)
            if (r.label == 0) ++c0;
        const std::size_t c1 = subset.size() - c0;
        const auto target_train = static_cast<std::size_t>(
            std::floor(static_cast<double>(subset.size()) * config.train_fraction + 0.5));
        auto t0 = static_cast<std::size_t>(
            std::floor(static_cast<double>(c0) * config.train_fraction + 0.5));
        t0 = std::min(t0, std::min(c0, target_train));
        std::size_t t1 = target_train - t0;
        if (t1 > c1) {
            t0 += t1 - c1;
            t1 = c1;
        }

        SensorState st;
        st.sensor_id = s;
        st.faulty = config.faulty_ids.count(s) > 0;
        st.fed_model = init;
        st.shadow_model = init;
        std::size_t seen0 = 0, seen1 = 0;
        for (const auto& r : subset) {
            const bool train = (r.label == 0) ? (seen0++ < t0) : (seen1++ < t1);
            (train ? st.train_rows : st.test_rows).push_back(r);
        }
        sensors.push_back(std::move(st));
    }
    return sensors;
}

std::vector<std::pair<std::size_t, std::size_t>> make_batches(const SensorState& sensor,
                                                              int n_rounds) {
    if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
    const std::size_t n = sensor.train_rows.size();
    if (n < static_cast<std::size_t>(n_rounds))
        throw DataError("fewer training rows than rounds");
    const std::size_t base = n / static_cast<std::size_t>(n_rounds);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    batches.reserve(static_cast<std::size_t>(n_rounds));
    for (int r = 0; r < n_rounds; ++r) {
        const std::size_t b = static_cast<std::size_t>(r) * base;
        const std::size_t e = (r == n_rounds - 1) ? n : b + base;
        batches.emplace_back(b, e);
    }
    return batches;
}

std::vector<FeatureRow> corrupt_labels(const std::vector<FeatureRow>& batch,
                                       std::uint64_t seed) {
    std::vector<FeatureRow> out = batch;
    Rng rng(seed);
    for (auto& r : out) r.label = rng.coin() ? 1 : 0;
    return out;
}

learn::CoefVector fedavg(std::span<const learn::CoefVector> coefs) {
    if (coefs.empty()) throw DataError("fedavg over empty list");
    const auto& shape = coefs.front().shape;
    for (const auto& c : coefs)
        if (!(c.shape == shape) || c.values.size() != shape.coef_count())
            throw DataError("fedavg shape mismatch");
    // Mean as first vector plus mean of deltas: exact when all inputs are
    // identical (aggregation idempotence holds bit-for-bit).
    learn::CoefVector avg = coefs.front();
    const double inv = 1.0 / static_cast<double>(coefs.size());
    for (std::size_t i = 0; i < avg.values.size(); ++i) {
        double delta = 0.0;
        for (const auto& c : coefs) delta += c.values[i] - avg.values[i];
        avg.values[i] += delta * inv;
    }
    return avg;
}

OutlierReport detect_outliers(std::span<const learn::CoefVector> coefs, double outlier_z) {
    if (coefs.size() < 3) throw DataError("insufficient population");
    if (!(outlier_z > 0.0)) throw ConfigError("outlier_z must be > 0");
    const auto& shape = coefs.front().shape;
    for (const auto& c : coefs)
        if (!(c.shape == shape)) throw DataError("outlier detection shape mismatch");

    const std::size_t dim = shape.coef_count();
    const std::size_t n = coefs.size();

    std::vector<double> center(dim);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = coefs[i].values[j];
        center[j] = median_inplace(column);
    }

    OutlierReport rep;
    rep.distance.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = coefs[i].values[j] - center[j];
            acc += d * d;
        }
        rep.distance[i] = std::sqrt(acc);
    }

    std::vector<double> tmp = rep.distance;
    const double med = median_inplace(tmp);
    tmp = rep.distance;
    for (auto& v : tmp) v = std::abs(v - med);
    const double mad = median_inplace(tmp);

    rep.flagged.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rep.flagged[i] = (mad == 0.0) ? (rep.distance[i] > med * 10.0)
                                      : (rep.distance[i] > med + outlier_z * mad);
    }
    return rep;
}

std::vector<Fold> stratified_kfold(const std::vector<FeatureRow>& dataset, int k,
                                   std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be >= 2");
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (dataset[i].label == 0 ? idx0 : idx1).push_back(i);
    if (idx0.size() < static_cast<std::size_t>(k) || idx1.size() < static_cast<std::size_t>(k))
        throw DataError("label count smaller than k");

    Rng rng(derive_seed(seed, kFoldStream));
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i + 1));
            std::swap(v[i], v[j]);
        }
    };
    shuffle(idx0);
    shuffle(idx1);

    std::vector<std::vector<std::size_t>> fold_members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < idx0.size(); ++i)
        fold_members[i % static_cast<std::size_t>(k)].push_back(idx0[i]);
    for (std::size_t i = 0; i < idx1.size(); ++i)
        fold_members[i % static_cast<std::size_t>(k)].push_back(idx1[i]);

    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        auto& fold = folds[static_cast<std::size_t>(f)];
        fold.validation = fold_members[static_cast<std::size_t>(f)];
        std::sort(fold.validation.begin(), fold.validation.end());
        for (int g = 0; g < k; ++g)
            if (g != f)
                fold.train.insert(fold.train.end(), fold_members[static_cast<std::size_t>(g)].begin(),
                                  fold_members[static_cast<std::size_t>(g)].end());
        std::sort(fold.train.begin(), fold.train.end());
    }
    return folds;
}

Experiment::Experiment(const std::vector<FeatureRow>& dataset, const FedConfig& config)
    : cfg_(config), dataset_(dataset) {
    validate(cfg_);
    sensors_ = partition_sensors(dataset_, cfg_);
    batch_plans_.reserve(sensors_.size());
    std::vector<FeatureRow> pooled_train;
    for (const auto& s : sensors_) {
        batch_plans_.push_back(make_batches(s, cfg_.n_rounds));
        pooled_train.insert(pooled_train.end(), s.train_rows.begin(), s.train_rows.end());
    }
    norm_ = featex::normalize_fit(pooled_train);
    pooled_eval_ = to_examples(dataset_);
}

std::vector<learn::Example> Experiment::to_examples(
    const std::vector<FeatureRow>& rows) const {
    std::vector<learn::Example> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        learn::Example ex;
        ex.x = {(r.power - norm_.mean[0]) / norm_.stddev[0],
                (r.acf_kurtosis - norm_.mean[1]) / norm_.stddev[1],
                (r.acf_skewness - norm_.mean[2]) / norm_.stddev[2]};
        if (cfg_.shape.n_inputs != 3) {
            // Wider input layers (e.g. to match a 41-coefficient exchange)
            // are fed zero-padded features.
            ex.x.resize(static_cast<std::size_t>(cfg_.shape.n_inputs), 0.0);
        }
        ex.y = r.label;
        out.push_back(std::move(ex));
    }
    return out;
}

RoundReport Experiment::run_round() {
    if (round_ >= cfg_.n_rounds) throw ConfigError("all configured rounds already run");
    const int round = round_;

    std::vector<learn::CoefVector> submitted;
    submitted.reserve(sensors_.size());
    for (auto& s : sensors_) {
        // Training data enters gradually: round r reveals batch r and the
        // sensor trains on everything revealed so far. A faulty sensor
        // reports fresh random occupancy decisions every round, so its
        // revealed rows are re-corrupted from the (sensor, round) stream.
        const auto& plan = batch_plans_[static_cast<std::size_t>(s.sensor_id)];
        const std::size_t revealed_end = plan[static_cast<std::size_t>(round)].second;
        std::vector<FeatureRow> revealed(
            s.train_rows.begin(),
            s.train_rows.begin() + static_cast<std::ptrdiff_t>(revealed_end));
        if (s.faulty)
            revealed = corrupt_labels(
                revealed, derive_seed(cfg_.experiment_seed, kCorruptStream,
                                      static_cast<std::uint64_t>(s.sensor_id),
                                      static_cast<std::uint64_t>(round)));
        const auto examples = to_examples(revealed);
        s.fed_model = learn::train_batch(s.fed_model, examples, cfg_.train);
        s.shadow_model = learn::train_batch(s.shadow_model, examples, cfg_.train);
        s.batch_cursor = round + 1;
        submitted.push_back(s.fed_model);
    }

    OutlierReport outliers;
    if (submitted.size() >= 3) {
        outliers = detect_outliers(submitted, cfg_.outlier_z);
    } else {
        outliers.distance.assign(submitted.size(), 0.0);
        outliers.flagged.assign(submitted.size(), false);
    }

    learn::CoefVector aggregate;
    if (cfg_.exclude_flagged) {
        std::vector<learn::CoefVector> kept;
        for (std::size_t i = 0; i < submitted.size(); ++i)
            if (!outliers.flagged[i]) kept.push_back(submitted[i]);
        aggregate = fedavg(kept.empty() ? std::span<const learn::CoefVector>(submitted)
                                        : std::span<const learn::CoefVector>(kept));
    } else {
        aggregate = fedavg(submitted);
    }
    for (auto& s : sensors_) s.fed_model = aggregate;

    RoundReport rep;
    rep.round = round;
    const double fed_acc = learn::accuracy(aggregate, pooled_eval_);
    double shadow_sum = 0.0;
    for (const auto& s : sensors_) {
        SensorRound sr;
        sr.sensor_id = s.sensor_id;
        sr.fed_accuracy = fed_acc;
        sr.shadow_accuracy = learn::accuracy(s.shadow_model, pooled_eval_);
        sr.coef_distance = outliers.distance[static_cast<std::size_t>(s.sensor_id)];
        sr.flagged = outliers.flagged[static_cast<std::size_t>(s.sensor_id)];
        shadow_sum += sr.shadow_accuracy;
        rep.per_sensor.push_back(sr);
    }
    rep.mean_fed_accuracy = fed_acc;
    rep.mean_shadow_accuracy = shadow_sum / static_cast<double>(sensors_.size());
    ++round_;
    return rep;
}

ExperimentReport Experiment::run_all() {
    ExperimentReport report;
    report.config = cfg_;

    // Energy-detection baseline, calibrated on the dataset's noise rows.
    std::vector<double> noise_powers;
    for (const auto& r : dataset_)
        if (r.label == 0) noise_powers.push_back(r.power);
    const auto th = detect::calibrate_threshold(noise_powers, cfg_.pfa);
    report.energy_threshold = th.threshold;
    report.energy_accuracy = detect::energy_accuracy(dataset_, th);

    // Centralized references: one model per kind, trained on all training
    // rows with the full round budget of epochs.
    std::vector<FeatureRow> pooled_train;
    for (const auto& s : sensors_)
        pooled_train.insert(pooled_train.end(), s.train_rows.begin(), s.train_rows.end());
    const auto pooled_examples = to_examples(pooled_train);
    learn::TrainConfig central_cfg = cfg_.train;
    central_cfg.epochs_per_batch = cfg_.train.epochs_per_batch * cfg_.n_rounds;
    {
        learn::ModelShape shape{learn::ModelKind::Logistic, cfg_.shape.n_inputs, 0};
        auto m = learn::train_batch(learn::init_model(shape, central_cfg), pooled_examples,
                                    central_cfg);
        report.centralized_logistic = learn::accuracy(m, pooled_eval_);
    }
    {
        learn::ModelShape shape{learn::ModelKind::Mlp, cfg_.shape.n_inputs,
                                cfg_.shape.kind == learn::ModelKind::Mlp ? cfg_.shape.n_hidden
                                                                         : 4};
        auto m = learn::train_batch(learn::init_model(shape, central_cfg), pooled_examples,
                                    central_cfg);
        report.centralized_mlp = learn::accuracy(m, pooled_eval_);
    }

    while (round_ < cfg_.n_rounds) report.rounds.push_back(run_round());
    report.final_mean_fed = report.rounds.back().mean_fed_accuracy;
    report.final_mean_shadow = report.rounds.back().mean_shadow_accuracy;
    return report;
}

ExperimentReport run_experiment(const std::vector<FeatureRow>& dataset,
                                const FedConfig& config) {
    Experiment exp(dataset, config);
    return exp.run_all();
}

} // namespace specsense::fed

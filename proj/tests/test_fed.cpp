#include "specsense/errors.hpp"
#include "specsense/fed.hpp"
#include "specsense/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace specsense;
using namespace specsense::fed;

namespace {

// Synthetic feature rows: two overlapping Gaussian blobs along the power
// axis, unique power values so rows can be identified after shuffling.
std::vector<FeatureRow> blob_dataset(std::size_t n, std::uint64_t seed,
                                     double separation = 2.0) {
    Rng rng(seed);
    std::vector<FeatureRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 2);
        rows[i].label = y;
        rows[i].power = rng.normal() * 0.8 + (y ? separation : 0.0) +
                        1e-9 * static_cast<double>(i);
        rows[i].acf_kurtosis = rng.normal() * 0.5 + (y ? 0.4 : 0.0);
        rows[i].acf_skewness = rng.normal();
        rows[i].gain_db = y ? std::optional<double>(-10.0) : std::nullopt;
    }
    return rows;
}

FedConfig small_config() {
    FedConfig cfg;
    cfg.n_sensors = 5;
    cfg.n_rounds = 8;
    cfg.experiment_seed = 777;
    cfg.shape = learn::ModelShape{learn::ModelKind::Logistic, 3, 0};
    cfg.train.epochs_per_batch = 10;
    return cfg;
}

learn::CoefVector vec(std::vector<double> v) {
    learn::CoefVector c;
    c.shape = learn::ModelShape{learn::ModelKind::Logistic, 1, 0};
    c.values = std::move(v);
    return c;
}

} // namespace

TEST_CASE("partition sizes and stratified split") {
    const auto rows = blob_dataset(4000, 1);
    const auto sensors = partition_sensors(rows, small_config());
    REQUIRE(sensors.size() == 5);
    for (const auto& s : sensors) {
        CHECK(s.train_rows.size() == 640);
        CHECK(s.test_rows.size() == 160);
        // Stratification keeps the label mix close to the subset's.
        std::size_t train1 = 0;
        for (const auto& r : s.train_rows) train1 += static_cast<std::size_t>(r.label);
        CHECK(train1 >= 280);
        CHECK(train1 <= 360);
        CHECK(s.fed_model.values == s.shadow_model.values);
    }
    // Identical initialization across sensors.
    for (std::size_t i = 1; i < sensors.size(); ++i)
        CHECK(sensors[i].fed_model.values == sensors[0].fed_model.values);
}

TEST_CASE("partition is a disjoint cover of the shuffled prefix") {
    const auto rows = blob_dataset(503, 2); // 503 -> subsets of 100, 3 dropped
    const auto sensors = partition_sensors(rows, small_config());
    std::multiset<double> seen;
    for (const auto& s : sensors) {
        for (const auto& r : s.train_rows) seen.insert(r.power);
        for (const auto& r : s.test_rows) seen.insert(r.power);
    }
    CHECK(seen.size() == 500);
    std::multiset<double> all;
    for (const auto& r : rows) all.insert(r.power);
    for (double p : seen) CHECK(all.count(p) == 1);
}

TEST_CASE("partition determinism and validation") {
    const auto rows = blob_dataset(400, 3);
    const auto a = partition_sensors(rows, small_config());
    const auto b = partition_sensors(rows, small_config());
    for (std::size_t s = 0; s < a.size(); ++s) {
        REQUIRE(a[s].train_rows.size() == b[s].train_rows.size());
        for (std::size_t i = 0; i < a[s].train_rows.size(); ++i)
            CHECK(a[s].train_rows[i].power == b[s].train_rows[i].power);
    }
    CHECK_THROWS_AS(partition_sensors(blob_dataset(40, 4), small_config()), DataError);
}

TEST_CASE("batch plans") {
    SensorState s;
    s.train_rows.resize(640);
    auto batches = make_batches(s, 20);
    REQUIRE(batches.size() == 20);
    for (const auto& [b, e] : batches) CHECK(e - b == 32);

    s.train_rows.resize(641);
    batches = make_batches(s, 20);
    REQUIRE(batches.size() == 20);
    for (std::size_t i = 0; i + 1 < batches.size(); ++i)
        CHECK(batches[i].second - batches[i].first == 32);
    CHECK(batches.back().second - batches.back().first == 33);
    CHECK(batches.back().second == 641);

    s.train_rows.resize(5);
    CHECK_THROWS_AS(make_batches(s, 20), DataError);
}

TEST_CASE("label corruption") {
    const auto rows = blob_dataset(1000, 5);
    const auto corrupted = corrupt_labels(rows, 99);
    REQUIRE(corrupted.size() == rows.size());
    std::size_t ones = 0, feature_changes = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ones += static_cast<std::size_t>(corrupted[i].label);
        if (corrupted[i].power != rows[i].power) ++feature_changes;
    }
    CHECK(feature_changes == 0);
    CHECK(ones >= 450);
    CHECK(ones <= 550);

    const auto again = corrupt_labels(rows, 99);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].label == corrupted[i].label);

    CHECK(corrupt_labels({}, 1).empty());
}

TEST_CASE("fedavg") {
    const auto a = vec({1, 2});
    const auto b = vec({3, 4});
    const auto c = vec({5, 6});

    const std::vector<learn::CoefVector> same{a, a, a};
    CHECK(fedavg(same).values == a.values);

    const std::vector<learn::CoefVector> two{a, b};
    CHECK(fedavg(two).values == std::vector<double>{2, 3});

    const std::vector<learn::CoefVector> three{a, b, c};
    CHECK(fedavg(three).values == std::vector<double>{3, 4});

    CHECK_THROWS_AS(fedavg(std::vector<learn::CoefVector>{}), DataError);
    auto wrong = vec({1, 2, 3});
    wrong.shape = learn::ModelShape{learn::ModelKind::Logistic, 2, 0};
    const std::vector<learn::CoefVector> mismatch{a, wrong};
    CHECK_THROWS_AS(fedavg(mismatch), DataError);
}

TEST_CASE("outlier detection") {
    const std::vector<learn::CoefVector> identical{vec({1, 1}), vec({1, 1}), vec({1, 1}),
                                                   vec({1, 1}), vec({1, 1})};
    const auto none = detect_outliers(identical, 3.5);
    for (bool f : none.flagged) CHECK_FALSE(f);

    Rng rng(7);
    std::vector<learn::CoefVector> coefs;
    for (int i = 0; i < 4; ++i)
        coefs.push_back(vec({1.0 + 0.01 * rng.normal(), -2.0 + 0.01 * rng.normal()}));
    coefs.push_back(vec({5.0, 3.0})); // ~100x the cluster spread away
    const auto rep = detect_outliers(coefs, 3.5);
    CHECK_FALSE(rep.flagged[0]);
    CHECK_FALSE(rep.flagged[1]);
    CHECK_FALSE(rep.flagged[2]);
    CHECK_FALSE(rep.flagged[3]);
    CHECK(rep.flagged[4]);
    CHECK(rep.distance[4] > rep.distance[0]);

    const std::vector<learn::CoefVector> two{vec({1, 1}), vec({2, 2})};
    CHECK_THROWS_WITH_AS(detect_outliers(two, 3.5), "insufficient population", DataError);
}

TEST_CASE("stratified k-fold") {
    const auto rows = blob_dataset(100, 8); // 50/50
    const auto folds = stratified_kfold(rows, 5, 42);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all_val;
    for (const auto& f : folds) {
        CHECK(f.validation.size() == 20);
        std::size_t ones = 0;
        for (auto i : f.validation) ones += static_cast<std::size_t>(rows[i].label);
        CHECK(ones == 10);
        CHECK(f.train.size() == 80);
        for (auto i : f.validation) {
            CHECK(all_val.insert(i).second); // disjoint
            CHECK(std::find(f.train.begin(), f.train.end(), i) == f.train.end());
        }
    }
    CHECK(all_val.size() == 100);

    auto lopsided = blob_dataset(10, 9);
    for (auto& r : lopsided) r.label = 0;
    lopsided[0].label = 1;
    CHECK_THROWS_AS(stratified_kfold(lopsided, 2, 1), DataError);
}

TEST_CASE("rounds reach consensus while shadows diverge") {
    const auto rows = blob_dataset(1000, 10);
    Experiment exp(rows, small_config());
    const auto rep = exp.run_round();
    CHECK(rep.round == 0);
    REQUIRE(rep.per_sensor.size() == 5);

    const auto& sensors = exp.sensors();
    for (std::size_t i = 1; i < sensors.size(); ++i)
        CHECK(sensors[i].fed_model.values == sensors[0].fed_model.values);

    bool any_shadow_differs = false;
    for (std::size_t i = 1; i < sensors.size(); ++i)
        if (sensors[i].shadow_model.values != sensors[0].shadow_model.values)
            any_shadow_differs = true;
    CHECK(any_shadow_differs);
}

TEST_CASE("experiment report shape and determinism") {
    const auto rows = blob_dataset(1000, 11);
    FedConfig cfg = small_config();
    cfg.faulty_ids = {0};
    const auto a = run_experiment(rows, cfg);
    const auto b = run_experiment(rows, cfg);

    REQUIRE(a.rounds.size() == static_cast<std::size_t>(cfg.n_rounds));
    CHECK(a.final_mean_fed == b.final_mean_fed);
    CHECK(a.final_mean_shadow == b.final_mean_shadow);
    for (std::size_t r = 0; r < a.rounds.size(); ++r) {
        CHECK(a.rounds[r].mean_fed_accuracy == b.rounds[r].mean_fed_accuracy);
        for (std::size_t s = 0; s < a.rounds[r].per_sensor.size(); ++s) {
            CHECK(a.rounds[r].per_sensor[s].coef_distance ==
                  b.rounds[r].per_sensor[s].coef_distance);
            CHECK(a.rounds[r].per_sensor[s].shadow_accuracy ==
                  b.rounds[r].per_sensor[s].shadow_accuracy);
        }
    }
    CHECK(a.energy_accuracy > 0.5);
    CHECK(a.centralized_logistic > 0.5);
}

TEST_CASE("shadow models are isolated from other sensors' faults") {
    const auto rows = blob_dataset(1000, 21);
    FedConfig cfg = small_config();
    Experiment clean(rows, cfg);
    cfg.faulty_ids = {0};
    Experiment faulty(rows, cfg);
    for (int r = 0; r < cfg.n_rounds; ++r) {
        clean.run_round();
        faulty.run_round();
    }
    for (std::size_t s = 1; s < 5; ++s)
        CHECK(clean.sensors()[s].shadow_model.values ==
              faulty.sensors()[s].shadow_model.values);
    CHECK(clean.sensors()[0].shadow_model.values !=
          faulty.sensors()[0].shadow_model.values);
}

TEST_CASE("more faulty sensors means more shadow harm") {
    const auto rows = blob_dataset(2000, 22, 4.0);
    FedConfig cfg = small_config();
    auto final_shadow = [&](std::set<int> faulty) {
        cfg.faulty_ids = std::move(faulty);
        return run_experiment(rows, cfg).final_mean_shadow;
    };
    const double s0 = final_shadow({});
    const double s1 = final_shadow({0});
    const double s2 = final_shadow({0, 1});
    CHECK(s1 <= s0);
    CHECK(s2 <= s1);
}

TEST_CASE("a faulty sensor drags its shadow down, not the federation") {
    const auto rows = blob_dataset(2000, 12, 4.0); // well separated
    FedConfig cfg = small_config();
    cfg.n_rounds = 10;
    const auto clean = run_experiment(rows, cfg);
    cfg.faulty_ids = {2};
    const auto faulty = run_experiment(rows, cfg);

    // The corrupted sensor's shadow sits near coin-flip accuracy while the
    // aggregate stays close to the clean run.
    const auto& last = faulty.rounds.back();
    CHECK(last.per_sensor[2].shadow_accuracy < 0.75);
    CHECK(faulty.final_mean_fed > clean.final_mean_fed - 0.05);
    CHECK(faulty.final_mean_shadow < clean.final_mean_shadow - 0.03);
}

#include "specsense/errors.hpp"
#include "specsense/featex.hpp"
#include "specsense/iqgen.hpp"
#include "specsense/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace specsense;
using namespace specsense::featex;

namespace {

Capture noise_capture(std::size_t n_windows, std::uint64_t seed) {
    Capture cap;
    cap.truth_occupied = false;
    cap.samples.resize(n_windows * kWindowLen);
    Rng rng(seed);
    for (auto& s : cap.samples) s = rng.complex_normal(1.0);
    return cap;
}

FeatureRow make_row(double power, int label, std::optional<double> gain) {
    FeatureRow r;
    r.power = power;
    r.acf_kurtosis = power * 0.5 - 1.0;
    r.acf_skewness = -power * 0.25;
    r.label = label;
    r.gain_db = gain;
    r.channel_index = 5;
    return r;
}

} // namespace

TEST_CASE("window_split counts and remainder") {
    Capture cap = noise_capture(3, 1);
    cap.samples.resize(25000);
    const auto w = window_split(cap);
    REQUIRE(w.size() == 2);
    CHECK(w[0].samples.size() == kWindowLen);
    CHECK(w[0].samples.data() == cap.samples.data());
    CHECK(w[1].samples.data() == cap.samples.data() + kWindowLen);

    Capture one = noise_capture(1, 2);
    CHECK(window_split(one).size() == 1);

    Capture tiny = one;
    tiny.samples.resize(9999);
    CHECK_THROWS_AS(window_split(tiny), DataError);
}

TEST_CASE("windows inherit capture metadata") {
    Capture cap = noise_capture(1, 3);
    cap.truth_occupied = true;
    cap.gain_db = -6.0;
    const auto w = window_split(cap);
    CHECK(w[0].truth_occupied);
    CHECK(w[0].gain_db == -6.0);
}

TEST_CASE("channelizer isolates a bin-centered tone") {
    // Tone at shifted bin 2500 (channel 7 of 10 covers shifted 7000..7999,
    // i.e. positive frequencies 0.2..0.3 of fs).
    std::vector<ComplexSample> window(kWindowLen);
    for (std::size_t t = 0; t < kWindowLen; ++t) {
        const double ang =
            2.0 * std::numbers::pi * 2500.0 * static_cast<double>(t) / 10000.0;
        window[t] = {std::cos(ang), std::sin(ang)};
    }
    Channelizer ch(kWindowLen, 10);
    const auto series = ch.channelize(window);
    REQUIRE(series.size() == 10);
    std::vector<double> powers(10);
    double total = 0.0;
    for (int c = 0; c < 10; ++c) {
        for (const auto& v : series[static_cast<std::size_t>(c)])
            powers[static_cast<std::size_t>(c)] += std::norm(v);
        total += powers[static_cast<std::size_t>(c)];
    }
    CHECK(powers[7] / total >= 0.999);
}

TEST_CASE("channel powers partition the window power") {
    const auto cap = noise_capture(1, 5);
    Channelizer ch(kWindowLen, 10);
    const auto series = ch.channelize(cap.samples);
    double window_power = 0.0;
    for (const auto& v : cap.samples) window_power += std::norm(v);
    window_power /= static_cast<double>(kWindowLen);

    double sum = 0.0;
    for (const auto& s : series) {
        double p = 0.0;
        for (const auto& v : s) p += std::norm(v);
        sum += p / static_cast<double>(kWindowLen);
    }
    CHECK(std::abs(sum - window_power) / window_power < 1e-9);

    // channel_power agrees with the series route.
    for (int c = 0; c < 10; ++c) {
        double p = 0.0;
        for (const auto& v : series[static_cast<std::size_t>(c)]) p += std::norm(v);
        p /= static_cast<double>(kWindowLen);
        CHECK(ch.channel_power(cap.samples, c) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("white noise spreads power evenly over channels") {
    const auto cap = noise_capture(1, 6);
    Channelizer ch(kWindowLen, 10);
    double total = 0.0;
    std::vector<double> p(10);
    for (int c = 0; c < 10; ++c) {
        p[static_cast<std::size_t>(c)] = ch.channel_power(cap.samples, c);
        total += p[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < 10; ++c) {
        CHECK(p[static_cast<std::size_t>(c)] > total / 10 * 0.75);
        CHECK(p[static_cast<std::size_t>(c)] < total / 10 * 1.25);
    }
}

TEST_CASE("channelizer validation") {
    CHECK_THROWS_AS(Channelizer(kWindowLen, 3), ConfigError);  // 3 does not divide 10000
    CHECK_THROWS_AS(Channelizer(kWindowLen, 0), ConfigError);
    Channelizer ch(kWindowLen, 10);
    const auto cap = noise_capture(1, 7);
    CHECK_THROWS_AS(ch.channel_series(cap.samples, 10), ConfigError);
}

TEST_CASE("autocorrelation of a constant series") {
    const std::size_t n = 500;
    const std::vector<ComplexSample> s(n, ComplexSample{1.0, 0.0});
    const auto r = autocorrelation(s, 100);
    REQUIRE(r.size() == 100);
    for (int k = 1; k <= 100; ++k) {
        const double expect = static_cast<double>(n - static_cast<std::size_t>(k)) /
                              static_cast<double>(n);
        CHECK(r[static_cast<std::size_t>(k - 1)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("autocorrelation bounds and errors") {
    Rng rng(8);
    std::vector<ComplexSample> s(2000);
    for (auto& v : s) v = rng.complex_normal(1.0);
    const auto r = autocorrelation(s, 150);
    for (double v : r) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(autocorrelation(s, static_cast<int>(s.size())), ConfigError);
    CHECK_THROWS_AS(autocorrelation(s, 0), ConfigError);
    const std::vector<ComplexSample> zeros(100, ComplexSample{0, 0});
    CHECK_THROWS_WITH_AS(autocorrelation(zeros, 10), "zero-power window", DataError);
}

TEST_CASE("white noise autocorrelation is small") {
    Rng rng(9);
    std::vector<ComplexSample> s(kWindowLen);
    for (auto& v : s) v = rng.complex_normal(1.0);
    const auto r = autocorrelation(s, 100);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    CHECK(mean < 0.03);
}

TEST_CASE("skewness hand values") {
    const std::vector<double> symmetric{1, 2, 3, 4, 5};
    CHECK(sample_skewness(symmetric) == 0.0);

    // {0,0,0,1}: m2 = 3/16, m3 = 3/32, skew = 2/sqrt(3).
    const std::vector<double> spike{0, 0, 0, 1};
    CHECK(sample_skewness(spike) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));

    const std::vector<double> constant{2, 2, 2, 2};
    CHECK_THROWS_WITH_AS(sample_skewness(constant), "degenerate distribution", DataError);
    CHECK_THROWS_AS(sample_skewness(std::vector<double>{1, 2}), ConfigError);
}

TEST_CASE("kurtosis hand values") {
    const std::vector<double> two_point{-1, 1, -1, 1};
    CHECK(sample_excess_kurtosis(two_point) == doctest::Approx(-2.0).epsilon(1e-12));

    Rng rng(10);
    std::vector<double> normal(1000000);
    for (auto& v : normal) v = rng.normal();
    CHECK(std::abs(sample_excess_kurtosis(normal)) < 0.03);

    const std::vector<double> constant{3, 3, 3, 3};
    CHECK_THROWS_AS(sample_excess_kurtosis(constant), DataError);
    CHECK_THROWS_AS(sample_excess_kurtosis(std::vector<double>{1, 2, 3}), ConfigError);
}

TEST_CASE("extract_features on noise and signal windows") {
    using namespace specsense::iqgen;
    // Same noise realization with and without a strong signal on top.
    const std::vector<ComplexSample> zeros(kWindowLen, ComplexSample{0, 0});
    const auto noise = add_awgn(zeros, 1.0, 42);

    const GmskParams gmsk;
    Rng bit_rng(43);
    std::vector<std::uint8_t> bits(kWindowLen /
                                   static_cast<std::size_t>(gmsk.samples_per_symbol));
    for (auto& b : bits) b = bit_rng.coin();
    auto sig = gmsk_modulate(bits, gmsk);
    const double amp = std::sqrt(std::pow(10.0, 10.0 / 10.0)); // +10 dB
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const double ang = 2.0 * std::numbers::pi * 0.05 * static_cast<double>(i);
        sig[i] = sig[i] * amp * ComplexSample{std::cos(ang), std::sin(ang)};
    }
    const auto sig_noise = add_awgn(sig, 1.0, 42);

    const IqWindow noise_win{std::span<const ComplexSample>(noise), std::nullopt, false};
    const IqWindow sig_win{std::span<const ComplexSample>(sig_noise), 10.0, true};

    const auto noise_row = extract_features(noise_win, 5, 10, 100);
    CHECK(noise_row.label == 0);
    CHECK(noise_row.power == doctest::Approx(0.1).epsilon(0.25));

    const auto sig_row = extract_features(sig_win, 5, 10, 100);
    CHECK(sig_row.label == 1);
    CHECK(sig_row.power > noise_row.power);

    const IqWindow zero_win{std::span<const ComplexSample>(zeros), std::nullopt, false};
    CHECK_THROWS_WITH_AS(extract_features(zero_win, 5, 10, 100), "zero-power window",
                         DataError);
}

TEST_CASE("signal-channel power separates clearly at +10 dB") {
    using namespace specsense::iqgen;
    SynthConfig cfg;
    cfg.noise_windows = 8;
    cfg.windows_per_gain = 8;
    cfg.gains_db = {10.0};
    FeatureExtractor ex(FeatureParams{});
    double noise_mean = 0.0, signal_mean = 0.0;
    const auto noise_cap = synth_capture(cfg, 0);
    for (const auto& w : window_split(noise_cap)) noise_mean += ex.extract(w).power;
    noise_mean /= 8.0;
    const auto sig_cap = synth_capture(cfg, 1);
    for (const auto& w : window_split(sig_cap)) signal_mean += ex.extract(w).power;
    signal_mean /= 8.0;
    CHECK(signal_mean >= 5.0 * noise_mean);
}

TEST_CASE("extraction pipeline is deterministic") {
    const auto cap = noise_capture(2, 12);
    FeatureExtractor ex(FeatureParams{});
    const auto w = window_split(cap);
    const auto a = ex.extract(w[0]);
    const auto b = ex.extract(w[0]);
    CHECK(a.power == b.power);
    CHECK(a.acf_kurtosis == b.acf_kurtosis);
    CHECK(a.acf_skewness == b.acf_skewness);
}

TEST_CASE("balance keeps the lowest gains") {
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 20; ++i) rows.push_back(make_row(1.0 + i, 0, std::nullopt));
    for (double g : {-10.0, -5.0, 0.0}) // 8 rows per gain, 24 signal rows
        for (int i = 0; i < 8; ++i) rows.push_back(make_row(2.0 + i, 1, g));

    const auto balanced = balance_labels(rows);
    std::size_t n0 = 0, n1 = 0, top_gain = 0;
    for (const auto& r : balanced) {
        if (r.label == 0) ++n0;
        else {
            ++n1;
            if (r.gain_db == 0.0) ++top_gain;
        }
    }
    CHECK(n0 == 20);
    CHECK(n1 == 20);
    CHECK(top_gain == 4); // -10 and -5 kept whole (16 rows), 4 of the top gain
}

TEST_CASE("balance identity and errors") {
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(make_row(i, 0, std::nullopt));
    for (int i = 0; i < 5; ++i) rows.push_back(make_row(i, 1, -10.0));
    const auto balanced = balance_labels(rows);
    REQUIRE(balanced.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(balanced[i].power == rows[i].power);
        CHECK(balanced[i].label == rows[i].label);
    }

    std::vector<FeatureRow> only0;
    only0.push_back(make_row(1, 0, std::nullopt));
    CHECK_THROWS_AS(balance_labels(only0), DataError);
}

TEST_CASE("normalization fit and apply") {
    Rng rng(13);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 200; ++i) {
        FeatureRow r;
        r.power = rng.uniform(0, 10);
        r.acf_kurtosis = rng.normal() * 3 + 1;
        r.acf_skewness = rng.normal() * 0.1 - 4;
        r.label = i % 2;
        rows.push_back(r);
    }
    const auto stats = normalize_fit(rows);
    const auto normed = normalize_apply(rows, stats);
    const auto check_stats = normalize_fit(normed);
    for (int f = 0; f < 3; ++f) {
        CHECK(std::abs(check_stats.mean[static_cast<std::size_t>(f)]) < 1e-9);
        CHECK(std::abs(check_stats.stddev[static_cast<std::size_t>(f)] - 1.0) < 1e-9);
    }

    NormStats identity;
    identity.mean = {0, 0, 0};
    identity.stddev = {1, 1, 1};
    const auto same = normalize_apply(rows, identity);
    CHECK(same[0].power == rows[0].power);
    CHECK(same[7].acf_skewness == rows[7].acf_skewness);

    std::vector<FeatureRow> constant_feature = rows;
    for (auto& r : constant_feature) r.acf_kurtosis = 5.0;
    CHECK_THROWS_WITH_AS(normalize_fit(constant_feature),
                         doctest::Contains("acf_kurtosis"), DataError);
}

TEST_CASE("dataset csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "specsense_test_featex";
    std::filesystem::create_directories(dir);
    std::vector<FeatureRow> rows;
    rows.push_back(make_row(0.123456789e-3, 0, std::nullopt));
    rows.push_back(make_row(1.0 / 3.0, 1, -14.0));
    const auto path = dir / "dataset.csv";
    write_dataset_csv(rows, path);
    const auto back = read_dataset_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].label == 0);
    CHECK_FALSE(back[0].gain_db.has_value());
    CHECK(back[1].gain_db == -14.0);
    // 9 significant digits survive the round trip.
    CHECK(back[1].power == doctest::Approx(rows[1].power).epsilon(1e-8));

    {
        std::ofstream f(dir / "bad.csv");
        f << "power,wrong,header\n";
    }
    CHECK_THROWS_AS(read_dataset_csv(dir / "bad.csv"), DataError);
}

#include "specsense/featex.hpp"

#include "specsense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace specsense::featex {

std::vector<IqWindow> window_split(const Capture& capture) {
    if (capture.samples.size() < kWindowLen)
        throw DataError("capture shorter than one window");
    const std::size_t n_windows = capture.samples.size() / kWindowLen;
    std::vector<IqWindow> windows;
    windows.reserve(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        windows.push_back(IqWindow{
            std::span<const ComplexSample>(capture.samples.data() + w * kWindowLen,
                                           kWindowLen),
            capture.gain_db, capture.truth_occupied});
    }
    return windows;
}

Channelizer::Channelizer(std::size_t window_len, int n_channels)
    : plan_(window_len), n_channels_(n_channels), bins_per_channel_(0) {
    if (n_channels < 1) throw ConfigError("n_channels must be >= 1");
    if (window_len % 2 != 0) throw ConfigError("window length must be even");
    if (window_len % static_cast<std::size_t>(n_channels) != 0)
        throw ConfigError("n_channels must divide the FFT length");
    bins_per_channel_ = window_len / static_cast<std::size_t>(n_channels);
}

std::vector<ComplexSample> Channelizer::spectrum(
    std::span<const ComplexSample> window) const {
    if (window.size() != plan_.size())
        throw DataError("window length does not match channelizer");
    std::vector<ComplexSample> spec(plan_.size());
    plan_.forward(window, spec);
    return spec;
}

std::array<std::pair<std::size_t, std::size_t>, 2> Channelizer::channel_bins(
    int channel) const {
    if (channel < 0 || channel >= n_channels_)
        throw ConfigError("channel index out of range");
    const std::size_t n = plan_.size();
    const std::size_t start_shifted = static_cast<std::size_t>(channel) * bins_per_channel_;
    const std::size_t s = (start_shifted + n / 2) % n;
    if (s + bins_per_channel_ <= n)
        return {{{s, s + bins_per_channel_}, {0, 0}}};
    return {{{s, n}, {0, s + bins_per_channel_ - n}}};
}

std::vector<ComplexSample> Channelizer::channel_series(
    std::span<const ComplexSample> window, int channel) const {
    const auto spec = spectrum(window);
    const auto ranges = channel_bins(channel);
    std::vector<ComplexSample> masked(plan_.size(), ComplexSample{0.0, 0.0});
    for (const auto& [b, e] : ranges)
        for (std::size_t k = b; k < e; ++k) masked[k] = spec[k];
    std::vector<ComplexSample> series(plan_.size());
    plan_.inverse(masked, series);
    return series;
}

std::vector<std::vector<ComplexSample>> Channelizer::channelize(
    std::span<const ComplexSample> window) const {
    const auto spec = spectrum(window);
    std::vector<std::vector<ComplexSample>> out;
    out.reserve(static_cast<std::size_t>(n_channels_));
    std::vector<ComplexSample> masked(plan_.size());
    std::vector<ComplexSample> series(plan_.size());
    for (int c = 0; c < n_channels_; ++c) {
        std::fill(masked.begin(), masked.end(), ComplexSample{0.0, 0.0});
        const auto ranges = channel_bins(c);
        for (const auto& [b, e] : ranges)
            for (std::size_t k = b; k < e; ++k) masked[k] = spec[k];
        plan_.inverse(masked, series);
        out.emplace_back(series.begin(), series.end());
    }
    return out;
}

double Channelizer::channel_power(std::span<const ComplexSample> window,
                                  int channel) const {
    const auto spec = spectrum(window);
    const auto ranges = channel_bins(channel);
    double acc = 0.0;
    for (const auto& [b, e] : ranges)
        for (std::size_t k = b; k < e; ++k) acc += std::norm(spec[k]);
    const double n = static_cast<double>(plan_.size());
    return acc / (n * n);
}

std::vector<double> autocorrelation(std::span<const ComplexSample> series, int max_lag) {
    const std::size_t n = series.size();
    if (max_lag < 1 || static_cast<std::size_t>(max_lag) >= n)
        throw ConfigError("max_lag must satisfy 1 <= max_lag < series length");
    double energy = 0.0;
    for (const auto& s : series) energy += std::norm(s);
    if (energy == 0.0) throw DataError("zero-power window");

    std::vector<double> r(static_cast<std::size_t>(max_lag));
    const ComplexSample* d = series.data();
    for (int k = 1; k <= max_lag; ++k) {
        double re = 0.0, im = 0.0;
        const std::size_t m = n - static_cast<std::size_t>(k);
        for (std::size_t t = 0; t < m; ++t) {
            const ComplexSample a = d[t];
            const ComplexSample b = d[t + static_cast<std::size_t>(k)];
            re += a.real() * b.real() + a.imag() * b.imag();
            im += a.imag() * b.real() - a.real() * b.imag();
        }
        r[static_cast<std::size_t>(k - 1)] = std::sqrt(re * re + im * im) / energy;
    }
    return r;
}

namespace {

struct Moments {
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments central_moments(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    Moments m;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    return m;
}

} // namespace

double sample_skewness(std::span<const double> values) {
    if (values.size() < 3) throw ConfigError("skewness needs at least 3 values");
    const Moments m = central_moments(values);
    if (m.m2 == 0.0) throw DataError("degenerate distribution");
    return m.m3 / std::pow(m.m2, 1.5);
}

double sample_excess_kurtosis(std::span<const double> values) {
    if (values.size() < 4) throw ConfigError("kurtosis needs at least 4 values");
    const Moments m = central_moments(values);
    if (m.m2 == 0.0) throw DataError("degenerate distribution");
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

FeatureExtractor::FeatureExtractor(const FeatureParams& params)
    : params_(params), channelizer_(kWindowLen, params.n_channels) {
    if (params.channel_index < 0 || params.channel_index >= params.n_channels)
        throw ConfigError("channel_index out of range");
    if (params.max_lag < 1 || static_cast<std::size_t>(params.max_lag) >= kWindowLen)
        throw ConfigError("max_lag out of range");
}

FeatureRow FeatureExtractor::extract(const IqWindow& window) const {
    const auto series = channelizer_.channel_series(window.samples, params_.channel_index);
    double energy = 0.0;
    for (const auto& s : series) energy += std::norm(s);
    if (energy == 0.0) throw DataError("zero-power window");
    const auto acf = autocorrelation(series, params_.max_lag);

    FeatureRow row;
    row.power = energy / static_cast<double>(series.size());
    row.acf_kurtosis = sample_excess_kurtosis(acf);
    row.acf_skewness = sample_skewness(acf);
    row.label = window.truth_occupied ? 1 : 0;
    row.gain_db = window.gain_db;
    row.channel_index = params_.channel_index;
    return row;
}

double FeatureExtractor::channel_power(const IqWindow& window) const {
    return channelizer_.channel_power(window.samples, params_.channel_index);
}

FeatureRow extract_features(const IqWindow& window, int channel_index, int n_channels,
                            int max_lag) {
    FeatureExtractor ex(FeatureParams{n_channels, channel_index, max_lag});
    return ex.extract(window);
}

std::vector<FeatureRow> balance_labels(const std::vector<FeatureRow>& rows) {
    std::size_t n0 = 0, n1 = 0;
    for (const auto& r : rows) (r.label == 0 ? n0 : n1)++;
    if (n0 == 0 || n1 == 0) throw DataError("cannot balance: a label is absent");
    if (n1 < n0) throw DataError("cannot balance: fewer signal rows than noise rows");

    // Signal rows ranked by gain, lowest first; stable within a gain level.
    std::vector<std::size_t> signal_idx;
    signal_idx.reserve(n1);
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].label == 1) signal_idx.push_back(i);
    std::stable_sort(signal_idx.begin(), signal_idx.end(),
                     [&](std::size_t a, std::size_t b) {
                         const double ga = rows[a].gain_db.value_or(
                             -std::numeric_limits<double>::infinity());
                         const double gb = rows[b].gain_db.value_or(
                             -std::numeric_limits<double>::infinity());
                         return ga < gb;
                     });

    std::vector<bool> keep(rows.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].label == 0) keep[i] = true;
    for (std::size_t i = 0; i < n0; ++i) keep[signal_idx[i]] = true;

    std::vector<FeatureRow> out;
    out.reserve(2 * n0);
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (keep[i]) out.push_back(rows[i]);
    return out;
}

NormStats normalize_fit(const std::vector<FeatureRow>& train_rows) {
    if (train_rows.size() < 2) throw DataError("need at least 2 rows to fit normalization");
    NormStats stats;
    const double n = static_cast<double>(train_rows.size());
    for (const auto& r : train_rows) {
        const auto f = features_of(r);
        for (int i = 0; i < 3; ++i) stats.mean[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
    }
    for (auto& m : stats.mean) m /= n;
    for (const auto& r : train_rows) {
        const auto f = features_of(r);
        for (int i = 0; i < 3; ++i) {
            const double d = f[static_cast<std::size_t>(i)] - stats.mean[static_cast<std::size_t>(i)];
            stats.stddev[static_cast<std::size_t>(i)] += d * d;
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        stats.stddev[i] = std::sqrt(stats.stddev[i] / n);
        if (stats.stddev[i] == 0.0)
            throw DataError(std::string("zero variance in feature ") + kFeatureNames[i]);
    }
    return stats;
}

std::vector<FeatureRow> normalize_apply(const std::vector<FeatureRow>& rows,
                                        const NormStats& stats) {
    for (std::size_t i = 0; i < 3; ++i)
        if (!(stats.stddev[i] > 0.0))
            throw ConfigError(std::string("non-positive stddev for feature ") + kFeatureNames[i]);
    std::vector<FeatureRow> out = rows;
    for (auto& r : out) {
        r.power = (r.power - stats.mean[0]) / stats.stddev[0];
        r.acf_kurtosis = (r.acf_kurtosis - stats.mean[1]) / stats.stddev[1];
        r.acf_skewness = (r.acf_skewness - stats.mean[2]) / stats.stddev[2];
    }
    return out;
}

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

void write_dataset_csv(const std::vector<FeatureRow>& rows,
                       const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << "power,acf_kurtosis,acf_skewness,label,gain_db,channel_index\n";
    for (const auto& r : rows) {
        f << fmt9(r.power) << ',' << fmt9(r.acf_kurtosis) << ',' << fmt9(r.acf_skewness)
          << ',' << r.label << ',';
        if (r.gain_db.has_value()) f << fmt9(*r.gain_db);
        f << ',' << r.channel_index << '\n';
    }
    if (!f) throw DataError("write failed: " + path.string());
}

std::vector<FeatureRow> read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open dataset: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty dataset file: " + path.string());
    if (line == "power,acf_kurtosis,acf_skewness,label,gain_db,channel_index\r")
        line.pop_back();
    if (line != "power,acf_kurtosis,acf_skewness,label,gain_db,channel_index")
        throw DataError("bad dataset header in " + path.string());

    std::vector<FeatureRow> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 6)
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 6 fields");
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0')
                throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": bad number '" + s + "'");
            return v;
        };
        FeatureRow r;
        r.power = num(fields[0]);
        r.acf_kurtosis = num(fields[1]);
        r.acf_skewness = num(fields[2]);
        const double label = num(fields[3]);
        if (label != 0.0 && label != 1.0)
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": label must be 0 or 1");
        r.label = static_cast<int>(label);
        r.gain_db = fields[4].empty() ? std::optional<double>{} : std::optional<double>{num(fields[4])};
        r.channel_index = static_cast<int>(num(fields[5]));
        rows.push_back(r);
    }
    return rows;
}

} // namespace specsense::featex

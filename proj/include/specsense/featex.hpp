#pragma once

#include "specsense/fft.hpp"
#include "specsense/types.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace specsense::featex {

// Cuts a capture into consecutive non-overlapping windows of kWindowLen
// samples; the remainder is dropped. Views into the capture's buffer.
std::vector<IqWindow> window_split(const Capture& capture);

// FFT channelizer over one window length. Channels are contiguous equal bin
// groups in FFT-shifted order (channel 0 = lowest frequency). A channel's
// time series is the inverse DFT of the window spectrum with all
// out-of-channel bins zeroed.
class Channelizer {
public:
    Channelizer(std::size_t window_len, int n_channels);

    int n_channels() const { return n_channels_; }

    std::vector<ComplexSample> channel_series(std::span<const ComplexSample> window,
                                              int channel) const;
    std::vector<std::vector<ComplexSample>> channelize(
        std::span<const ComplexSample> window) const;

    // Mean power of one channel's series, computed from the spectrum without
    // the inverse transform (Parseval). Agrees with the series power to FFT
    // rounding; used on hot noise-calibration paths.
    double channel_power(std::span<const ComplexSample> window, int channel) const;

private:
    std::vector<ComplexSample> spectrum(std::span<const ComplexSample> window) const;
    // Unshifted bin range [begin, end) pairs covering `channel`.
    std::array<std::pair<std::size_t, std::size_t>, 2> channel_bins(int channel) const;

    FftPlan plan_;
    int n_channels_;
    std::size_t bins_per_channel_;
};

// Biased linear autocorrelation magnitude, lags 1..max_lag:
//   r[k] = | sum_{t=0}^{N-1-k} s[t] * conj(s[t+k]) | / sum_t |s[t]|^2
std::vector<double> autocorrelation(std::span<const ComplexSample> series, int max_lag);

// Population-moment estimators (biased): skew = m3 / m2^(3/2),
// excess kurtosis = m4 / m2^2 - 3.
double sample_skewness(std::span<const double> values);
double sample_excess_kurtosis(std::span<const double> values);

struct FeatureParams {
    int n_channels = 10;
    int channel_index = 5;
    int max_lag = 100;
};

// One-shot extraction; builds a throwaway plan. Pipelines should reuse a
// FeatureExtractor.
FeatureRow extract_features(const IqWindow& window, int channel_index, int n_channels,
                            int max_lag);

class FeatureExtractor {
public:
    explicit FeatureExtractor(const FeatureParams& params);

    FeatureRow extract(const IqWindow& window) const;
    double channel_power(const IqWindow& window) const;
    const FeatureParams& params() const { return params_; }

private:
    FeatureParams params_;
    Channelizer channelizer_;
};

// Keeps all label-0 rows; keeps label-1 rows from the lowest gain levels
// upward until the counts match exactly. Deterministic.
std::vector<FeatureRow> balance_labels(const std::vector<FeatureRow>& rows);

struct NormStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

NormStats normalize_fit(const std::vector<FeatureRow>& train_rows);
std::vector<FeatureRow> normalize_apply(const std::vector<FeatureRow>& rows,
                                        const NormStats& stats);

inline std::array<double, 3> features_of(const FeatureRow& row) {
    return {row.power, row.acf_kurtosis, row.acf_skewness};
}

// Dataset CSV: header power,acf_kurtosis,acf_skewness,label,gain_db,
// channel_index; gain_db empty for noise rows; 9 significant digits.
void write_dataset_csv(const std::vector<FeatureRow>& rows,
                       const std::filesystem::path& path);
std::vector<FeatureRow> read_dataset_csv(const std::filesystem::path& path);

} // namespace specsense::featex

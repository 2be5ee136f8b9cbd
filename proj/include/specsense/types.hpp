#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace specsense {

using ComplexSample = std::complex<double>;

// Fixed processing block: the capture stream is cut into blocks of this many
// IQ samples and every block yields one feature row per analyzed channel.
inline constexpr std::size_t kWindowLen = 10000;

// One recorded (or synthesized) IQ stream. Samples are kept at 32-bit float
// precision even though the in-memory type is double: synthesis quantizes
// through float, so writing and re-reading a capture is bit-exact.
struct Capture {
    std::vector<ComplexSample> samples;
    std::optional<double> gain_db;   // nullopt = noise-only capture
    double sample_rate_hz = 40e6;
    double center_freq_hz = 2.1e9;
    bool truth_occupied = false;
    std::uint64_t seed = 0;          // stream seed this capture was drawn from
};

// Non-owning view of one processing block; valid while the capture lives.
struct IqWindow {
    std::span<const ComplexSample> samples;
    std::optional<double> gain_db;
    bool truth_occupied = false;
};

// Per-(window, channel) classifier input.
struct FeatureRow {
    double power = 0.0;          // linear mean power in the channel
    double acf_kurtosis = 0.0;   // excess kurtosis of the ACF lag profile
    double acf_skewness = 0.0;
    int label = 0;               // 1 = occupied
    std::optional<double> gain_db;
    int channel_index = 0;
};

inline constexpr const char* kFeatureNames[3] = {"power", "acf_kurtosis", "acf_skewness"};

} // namespace specsense

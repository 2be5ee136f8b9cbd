#pragma once

#include "specsense/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace specsense::iqgen {

struct GmskParams {
    // Symbol rate of fs/16 keeps the signal well inside one 4 MHz channel,
    // which is what gives the autocorrelation features their contrast.
    int samples_per_symbol = 16;
    double bt = 0.3;               // Gaussian filter bandwidth-time product
    double modulation_index = 0.5; // fixed for GMSK
    int pulse_span_symbols = 4;
};

// GMSK baseband modulation. Output length = bits.size() * samples_per_symbol,
// constant envelope |s| == 1. Phase integrates the Gaussian-filtered NRZ bit
// stream; in steady state each symbol contributes +/- pi/2 of phase.
std::vector<ComplexSample> gmsk_modulate(const std::vector<std::uint8_t>& bits,
                                         const GmskParams& params);

// out[i] = in[i] + n[i], n i.i.d. complex Gaussian with total variance
// noise_power. Deterministic given seed.
std::vector<ComplexSample> add_awgn(std::span<const ComplexSample> samples,
                                    double noise_power, std::uint64_t seed);

struct SynthConfig {
    // Desk scale: 2,000 noise windows plus ~2,200 signal windows swept in
    // 2 dB steps around the detectability edge of the energy detector.
    std::size_t noise_windows = 2000;
    std::size_t windows_per_gain = 367;
    std::vector<double> gains_db = {-23, -21, -19, -17, -15, -13};
    GmskParams gmsk;
    double sample_rate_hz = 40e6;
    double center_freq_hz = 2.1e9;
    int n_channels = 10;     // the GMSK carrier is centered in signal_channel
    int signal_channel = 5;
    std::uint64_t master_seed = 20230001;
};

void validate(const SynthConfig& config);

// Number of captures the config produces: one noise capture plus one per gain.
std::size_t capture_count(const SynthConfig& config);

// Synthesizes capture `index` (0 = noise-only, 1.. = gains in config order).
// Pure given (config, index): captures can be produced in any order or in
// parallel with identical results.
Capture synth_capture(const SynthConfig& config, std::size_t index);

// All captures at once. Convenient for tests; large configs should iterate
// synth_capture and drop each capture after use.
std::vector<Capture> synth_capture_set(const SynthConfig& config);

// Raw IQ file format: interleaved re,im as 32-bit IEEE-754 little-endian
// floats, no header. Metadata travels in a JSON sidecar.
struct CaptureMeta {
    std::optional<double> gain_db;
    double sample_rate_hz = 40e6;
    double center_freq_hz = 2.1e9;
    bool truth_occupied = false;
    std::uint64_t seed = 0;
};

void write_iq(const Capture& capture, const std::filesystem::path& path);
Capture read_iq(const std::filesystem::path& path, const CaptureMeta& meta);

void write_sidecar(const CaptureMeta& meta, const std::filesystem::path& path);
CaptureMeta read_sidecar(const std::filesystem::path& path);

// Sidecar path convention: capture.iq -> capture.meta.json
std::filesystem::path sidecar_path(const std::filesystem::path& iq_path);

} // namespace specsense::iqgen

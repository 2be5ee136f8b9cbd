#include "specsense/iqgen.hpp"

#include "specsense/errors.hpp"
#include "specsense/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

namespace specsense::iqgen {

namespace {

constexpr std::uint64_t kCaptureStream = 0xCA11;
constexpr std::uint64_t kBitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

void validate_gmsk(const GmskParams& p) {
    if (p.samples_per_symbol < 2) throw ConfigError("samples_per_symbol must be >= 2");
    if (!(p.bt > 0.0 && p.bt <= 1.0)) throw ConfigError("bt must be in (0, 1]");
    if (p.modulation_index != 0.5) throw ConfigError("modulation_index must be 0.5 for GMSK");
    if (p.pulse_span_symbols < 1) throw ConfigError("pulse_span_symbols must be >= 1");
}

// Truncated Gaussian FIR, unit DC gain, spanning pulse_span symbols.
std::vector<double> gaussian_taps(const GmskParams& p) {
    const int len = p.pulse_span_symbols * p.samples_per_symbol + 1;
    const double sigma = std::sqrt(std::log(2.0)) / (2.0 * std::numbers::pi * p.bt);
    const double center = 0.5 * static_cast<double>(len - 1);
    std::vector<double> taps(len);
    double sum = 0.0;
    for (int i = 0; i < len; ++i) {
        const double t = (static_cast<double>(i) - center) / p.samples_per_symbol;
        taps[i] = std::exp(-t * t / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (auto& v : taps) v /= sum;
    return taps;
}

// The volatile stores keep the float rounding in place: GCC's vectorizer
// (observed with 11.4 at -O3) otherwise folds double->float->double away.
ComplexSample quantize_f32(ComplexSample s) {
    volatile float re = static_cast<float>(s.real());
    volatile float im = static_cast<float>(s.imag());
    return {static_cast<double>(re), static_cast<double>(im)};
}

void put_f32_le(std::string& buf, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    buf.push_back(static_cast<char>(u & 0xff));
    buf.push_back(static_cast<char>((u >> 8) & 0xff));
    buf.push_back(static_cast<char>((u >> 16) & 0xff));
    buf.push_back(static_cast<char>((u >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(u);
}

} // namespace

std::vector<ComplexSample> gmsk_modulate(const std::vector<std::uint8_t>& bits,
                                         const GmskParams& params) {
    if (bits.empty()) throw DataError("empty input");
    validate_gmsk(params);

    const int sps = params.samples_per_symbol;
    const int span = params.pulse_span_symbols;
    const std::size_t n = bits.size() * static_cast<std::size_t>(sps);
    const std::vector<double> taps = gaussian_taps(params);

    // The NRZ stream is piecewise constant over each symbol, so the filtered
    // frequency at sample k*sps+phase is a fixed weighting of the span+1
    // symbols that overlap the filter there. Precompute those weights; the
    // result equals direct convolution of the sample-rate NRZ with the taps.
    const int overlap = span + 1;
    std::vector<double> weight(static_cast<std::size_t>(overlap) * sps, 0.0);
    for (int j = 0; j < overlap; ++j) {
        for (int phase = 0; phase < sps; ++phase) {
            double w = 0.0;
            for (int m = 0; m < static_cast<int>(taps.size()); ++m) {
                const int rel = phase - m; // sample offset of nrz index within symbol grid
                const int sym = (rel >= 0) ? rel / sps : -(((-rel) + sps - 1) / sps);
                if (-sym == j) w += taps[static_cast<std::size_t>(m)];
            }
            weight[static_cast<std::size_t>(j) * sps + phase] = w;
        }
    }

    std::vector<ComplexSample> out(n);
    // Modulation index h contributes pi*h of phase per symbol when the
    // filtered NRZ sits at +/-1 (q(inf) = 1/2 in CPM terms).
    const double phase_gain =
        std::numbers::pi * params.modulation_index / static_cast<double>(sps);
    double phase = 0.0;
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t sym = i / static_cast<std::size_t>(sps);
        const int ph = static_cast<int>(i % static_cast<std::size_t>(sps));
        double freq = 0.0;
        for (int j = 0; j < overlap; ++j) {
            const std::int64_t b = static_cast<std::int64_t>(sym) - j;
            if (b < 0) continue;
            const double nrz = bits[static_cast<std::size_t>(b)] ? 1.0 : -1.0;
            freq += nrz * weight[static_cast<std::size_t>(j) * sps + ph];
        }
        phase += phase_gain * freq;
        if (phase > pi) phase -= 2.0 * pi;
        else if (phase < -pi) phase += 2.0 * pi;
        out[i] = {std::cos(phase), std::sin(phase)};
    }
    return out;
}

std::vector<ComplexSample> add_awgn(std::span<const ComplexSample> samples,
                                    double noise_power, std::uint64_t seed) {
    if (noise_power < 0.0) throw ConfigError("noise_power must be >= 0");
    std::vector<ComplexSample> out(samples.begin(), samples.end());
    if (noise_power == 0.0) return out;
    Rng rng(seed);
    for (auto& s : out) s += rng.complex_normal(noise_power);
    return out;
}

void validate(const SynthConfig& config) {
    validate_gmsk(config.gmsk);
    if (config.gains_db.empty()) throw ConfigError("gain list must not be empty");
    for (double g : config.gains_db) {
        if (!std::isfinite(g)) throw ConfigError("gain levels must be finite");
    }
    if (config.noise_windows < 1) throw ConfigError("noise_windows must be >= 1");
    if (config.windows_per_gain < 1) throw ConfigError("windows_per_gain must be >= 1");
    if (config.n_channels < 1) throw ConfigError("n_channels must be >= 1");
    if (config.signal_channel < 0 || config.signal_channel >= config.n_channels)
        throw ConfigError("signal_channel out of range");
}

std::size_t capture_count(const SynthConfig& config) { return 1 + config.gains_db.size(); }

Capture synth_capture(const SynthConfig& config, std::size_t index) {
    validate(config);
    if (index >= capture_count(config)) throw ConfigError("capture index out of range");

    const std::uint64_t capture_seed = derive_seed(config.master_seed, kCaptureStream, index);
    Capture cap;
    cap.sample_rate_hz = config.sample_rate_hz;
    cap.center_freq_hz = config.center_freq_hz;
    cap.seed = capture_seed;

    if (index == 0) {
        const std::size_t n = config.noise_windows * kWindowLen;
        cap.gain_db = std::nullopt;
        cap.truth_occupied = false;
        cap.samples.resize(n);
        Rng rng(derive_seed(capture_seed, kNoiseStream));
        for (auto& s : cap.samples) s = quantize_f32(rng.complex_normal(1.0));
        return cap;
    }

    const double gain_db = config.gains_db[index - 1];
    const std::size_t n = config.windows_per_gain * kWindowLen;
    const int sps = config.gmsk.samples_per_symbol;
    const std::size_t n_bits = (n + static_cast<std::size_t>(sps) - 1) / sps;

    Rng bit_rng(derive_seed(capture_seed, kBitStream));
    std::vector<std::uint8_t> bits(n_bits);
    for (auto& b : bits) b = bit_rng.coin() ? 1 : 0;

    std::vector<ComplexSample> sig = gmsk_modulate(bits, config.gmsk);
    sig.resize(n);

    // Unit-power GMSK scaled to 10^(g/10) and mixed up to the center of the
    // signal channel; unit-power AWGN on top, so gain_db doubles as SNR.
    const double amp = std::sqrt(std::pow(10.0, gain_db / 10.0));
    const double f_offset =
        (static_cast<double>(config.signal_channel) + 0.5) / config.n_channels - 0.5;
    const double dphi = 2.0 * std::numbers::pi * f_offset;
    const double pi = std::numbers::pi;
    double phi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sig[i] *= amp * ComplexSample{std::cos(phi), std::sin(phi)};
        phi += dphi;
        if (phi > pi) phi -= 2.0 * pi;
        else if (phi < -pi) phi += 2.0 * pi;
    }

    Rng noise_rng(derive_seed(capture_seed, kNoiseStream));
    for (auto& s : sig) s = quantize_f32(s + noise_rng.complex_normal(1.0));

    cap.gain_db = gain_db;
    cap.truth_occupied = true;
    cap.samples = std::move(sig);
    return cap;
}

std::vector<Capture> synth_capture_set(const SynthConfig& config) {
    validate(config);
    std::vector<Capture> captures;
    captures.reserve(capture_count(config));
    for (std::size_t i = 0; i < capture_count(config); ++i)
        captures.push_back(synth_capture(config, i));
    return captures;
}

void write_iq(const Capture& capture, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(capture.samples.size() * 8);
    for (const auto& s : capture.samples) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw DataError("cannot write non-finite sample");
        put_f32_le(buf, static_cast<float>(s.real()));
        put_f32_le(buf, static_cast<float>(s.imag()));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw DataError("write failed: " + path.string());
}

Capture read_iq(const std::filesystem::path& path, const CaptureMeta& meta) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw DataError("cannot open IQ file: " + path.string());
    const std::streamoff size = f.tellg();
    if (size < 0 || size % 8 != 0)
        throw DataError("malformed IQ file: " + path.string());
    f.seekg(0);
    std::vector<unsigned char> raw(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(raw.data()), size);
    if (!f) throw DataError("read failed: " + path.string());

    Capture cap;
    cap.gain_db = meta.gain_db;
    cap.sample_rate_hz = meta.sample_rate_hz;
    cap.center_freq_hz = meta.center_freq_hz;
    cap.truth_occupied = meta.truth_occupied;
    cap.seed = meta.seed;
    cap.samples.resize(raw.size() / 8);
    for (std::size_t i = 0; i < cap.samples.size(); ++i) {
        const float re = get_f32_le(raw.data() + i * 8);
        const float im = get_f32_le(raw.data() + i * 8 + 4);
        if (std::isnan(re) || std::isnan(im))
            throw DataError("NaN sample in IQ file: " + path.string());
        cap.samples[i] = {static_cast<double>(re), static_cast<double>(im)};
    }
    return cap;
}

void write_sidecar(const CaptureMeta& meta, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    if (meta.gain_db.has_value())
        j["gain_db"] = *meta.gain_db;
    else
        j["gain_db"] = "noise";
    j["sample_rate_hz"] = meta.sample_rate_hz;
    j["center_freq_hz"] = meta.center_freq_hz;
    j["truth_occupied"] = meta.truth_occupied;
    j["seed"] = meta.seed;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << j.dump(2) << "\n";
}

CaptureMeta read_sidecar(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open sidecar: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception&) {
        throw DataError("corrupt sidecar: " + path.string());
    }
    CaptureMeta meta;
    try {
        if (j.at("gain_db").is_string()) {
            if (j.at("gain_db").get<std::string>() != "noise")
                throw DataError("corrupt sidecar: " + path.string());
            meta.gain_db = std::nullopt;
        } else {
            meta.gain_db = j.at("gain_db").get<double>();
        }
        meta.sample_rate_hz = j.at("sample_rate_hz").get<double>();
        meta.center_freq_hz = j.at("center_freq_hz").get<double>();
        meta.truth_occupied = j.at("truth_occupied").get<bool>();
        meta.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
        throw DataError("corrupt sidecar: " + path.string());
    }
    if (meta.truth_occupied != meta.gain_db.has_value())
        throw DataError("corrupt sidecar (occupancy/gain mismatch): " + path.string());
    return meta;
}

std::filesystem::path sidecar_path(const std::filesystem::path& iq_path) {
    std::filesystem::path p = iq_path;
    p.replace_extension(".meta.json");
    return p;
}

} // namespace specsense::iqgen

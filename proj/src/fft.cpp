#include "specsense/fft.hpp"

#include "specsense/errors.hpp"

#include <cmath>
#include <numbers>

namespace specsense {

namespace {

std::size_t smallest_factor(std::size_t n) {
    for (std::size_t p : {2ul, 3ul, 5ul, 7ul}) {
        if (n % p == 0) return p;
    }
    for (std::size_t p = 11; p * p <= n; p += 2) {
        if (n % p == 0) return p;
    }
    return n;
}

} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw ConfigError("FFT length must be positive");
    std::size_t m = n;
    while (m >= 1) {
        Level level;
        level.n = m;
        level.radix = (m == 1) ? 1 : smallest_factor(m);
        level.tw.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) /
                               static_cast<double>(m);
            level.tw[j] = {std::cos(ang), std::sin(ang)};
        }
        levels_.push_back(std::move(level));
        if (m == 1) break;
        m /= levels_.back().radix;
    }
}

void FftPlan::recurse(const std::complex<double>* in, std::size_t stride,
                      std::complex<double>* out, std::size_t depth,
                      std::complex<double>* scratch, bool inv) const {
    const Level& level = levels_[depth];
    const std::size_t n = level.n;
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = level.radix;
    const std::size_t m = n / p;

    for (std::size_t j = 0; j < p; ++j) {
        recurse(in + j * stride, stride * p, out + j * m, depth + 1, scratch, inv);
    }

    // Combine the p sub-transforms. Twiddle index (j*k) mod n is tracked by
    // stepped addition so the inner loop carries no division.
    const std::complex<double>* tw = level.tw.data();
    constexpr std::size_t kMaxRadix = 64;
    std::size_t idx[kMaxRadix];
    std::size_t step[kMaxRadix];
    if (p > kMaxRadix) throw ConfigError("FFT radix too large");
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            idx[j] = (j * r) % n;
            step[j] = (j * m) % n;
        }
        for (std::size_t q = 0; q < p; ++q) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t j = 0; j < p; ++j) {
                const std::complex<double> w = inv ? std::conj(tw[idx[j]]) : tw[idx[j]];
                acc += w * out[j * m + r];
                idx[j] += step[j];
                if (idx[j] >= n) idx[j] -= n;
            }
            scratch[q * m + r] = acc;
        }
    }
    for (std::size_t k = 0; k < n; ++k) out[k] = scratch[k];
}

void FftPlan::execute(const std::complex<double>* in, std::complex<double>* out,
                      bool inv) const {
    std::vector<std::complex<double>> scratch(n_);
    recurse(in, 1, out, 0, scratch.data(), inv);
}

void FftPlan::forward(std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
    if (in.size() != n_ || out.size() != n_)
        throw ConfigError("FFT buffer size does not match plan length");
    execute(in.data(), out.data(), false);
}

void FftPlan::inverse(std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
    if (in.size() != n_ || out.size() != n_)
        throw ConfigError("FFT buffer size does not match plan length");
    execute(in.data(), out.data(), true);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : out) v *= scale;
}

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x) {
    FftPlan plan(x.size());
    std::vector<std::complex<double>> out(x.size());
    plan.forward(x, out);
    return out;
}

std::vector<std::complex<double>> ifft(std::span<const std::complex<double>> x) {
    FftPlan plan(x.size());
    std::vector<std::complex<double>> out(x.size());
    plan.inverse(x, out);
    return out;
}

} // namespace specsense

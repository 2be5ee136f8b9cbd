#include "specsense/fft.hpp"
#include "specsense/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace specsense;

namespace {

// Independent O(n^2) DFT oracle.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                               static_cast<double>(t) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<std::complex<double>> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return x;
}

} // namespace

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_equal_c = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        if (va != b.next_u64()) all_equal = false;
        if (va == c.next_u64()) any_equal_c = true;
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_c);

    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("uniform01 stays in [0,1)") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    Rng rng(11);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("complex normal total power") {
    Rng rng(13);
    const int n = 500000;
    double p = 0.0;
    for (int i = 0; i < n; ++i) p += std::norm(rng.complex_normal(2.5));
    CHECK(p / n == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("fft matches the naive DFT oracle") {
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 6u, 8u, 10u, 12u, 16u, 20u, 25u, 40u, 100u, 250u}) {
        const auto x = random_signal(n, 1000 + n);
        const auto expect = naive_dft(x);
        const auto got = fft(x);
        REQUIRE(got.size() == n);
        double max_err = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            max_err = std::max(max_err, std::abs(got[k] - expect[k]));
            scale = std::max(scale, std::abs(expect[k]));
        }
        CHECK(max_err <= 1e-10 * std::max(scale, 1.0));
    }
}

TEST_CASE("inverse undoes forward") {
    const auto x = random_signal(10000, 77);
    const auto back = ifft(fft(x));
    double max_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        max_err = std::max(max_err, std::abs(back[i] - x[i]));
    CHECK(max_err < 1e-12);
}

TEST_CASE("parseval at window length") {
    const auto x = random_signal(10000, 99);
    const auto spec = fft(x);
    double time_e = 0.0, freq_e = 0.0;
    for (const auto& v : x) time_e += std::norm(v);
    for (const auto& v : spec) freq_e += std::norm(v);
    freq_e /= static_cast<double>(x.size());
    CHECK(std::abs(time_e - freq_e) / time_e < 1e-12);
}

TEST_CASE("plan reuse is consistent") {
    FftPlan plan(250);
    const auto x = random_signal(250, 5);
    std::vector<std::complex<double>> a(250), b(250);
    plan.forward(x, a);
    plan.forward(x, b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

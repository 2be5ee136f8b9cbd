#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace specsense {

// Mixed-radix Cooley-Tukey DFT plan for a fixed length. Handles any length
// whose prime factors are reasonable (10'000 = 2^4 * 5^4 is the main use).
// Twiddle tables are precomputed at construction; execution is const and
// safe to share across threads.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    // X[k] = sum_t x[t] exp(-2*pi*i*k*t/N)
    void forward(std::span<const std::complex<double>> in,
                 std::span<std::complex<double>> out) const;

    // x[t] = (1/N) sum_k X[k] exp(+2*pi*i*k*t/N)
    void inverse(std::span<const std::complex<double>> in,
                 std::span<std::complex<double>> out) const;

private:
    struct Level {
        std::size_t n;                        // transform size at this depth
        std::size_t radix;                    // smallest prime factor of n
        std::vector<std::complex<double>> tw; // exp(-2*pi*i*j/n), j in [0, n)
    };

    void execute(const std::complex<double>* in, std::complex<double>* out,
                 bool inv) const;
    void recurse(const std::complex<double>* in, std::size_t stride,
                 std::complex<double>* out, std::size_t depth,
                 std::complex<double>* scratch, bool inv) const;

    std::size_t n_;
    std::vector<Level> levels_; // sizes strictly decrease; last level has n == 1
};

// One-shot helpers for tests and small transforms.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x);
std::vector<std::complex<double>> ifft(std::span<const std::complex<double>> x);

} // namespace specsense

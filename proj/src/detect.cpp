#include "specsense/detect.hpp"

#include "specsense/errors.hpp"

#include <algorithm>
#include <cmath>

namespace specsense::detect {

EnergyThreshold calibrate_threshold(std::span<const double> noise_powers, double pfa) {
    if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("pfa must be in (0, 1)");
    const std::size_t n = noise_powers.size();
    const auto min_n = static_cast<std::size_t>(std::ceil(1.0 / pfa - 1e-9));
    if (n < min_n) throw DataError("insufficient calibration data");

    std::vector<double> sorted(noise_powers.begin(), noise_powers.end());
    std::sort(sorted.begin(), sorted.end());

    // m-th order statistic with m = ceil(N*(1-pfa)), computed as
    // N - floor(N*pfa) to keep FP slop away from the boundary.
    const auto allowed = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * pfa + 1e-12));
    const std::size_t m = n - allowed;

    EnergyThreshold th;
    th.threshold = sorted[m - 1];
    th.pfa_target = pfa;
    th.n_calibration = n;
    return th;
}

int energy_decide(double power, const EnergyThreshold& th) {
    return power > th.threshold ? 1 : 0;
}

double energy_accuracy(std::span<const FeatureRow> rows, const EnergyThreshold& th) {
    if (rows.empty()) throw DataError("empty dataset");
    std::size_t correct = 0;
    for (const auto& r : rows)
        if (energy_decide(r.power, th) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

} // namespace specsense::detect

#pragma once

#include "specsense/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace specsense::detect {

struct EnergyThreshold {
    double threshold = 0.0;   // linear power
    double pfa_target = 0.01;
    std::size_t n_calibration = 0;
};

// Empirical-quantile calibration: threshold is the ceil(N*(1-pfa))-th order
// statistic of the measured noise powers, the smallest calibration value t
// with |{p : p > t}| / N <= pfa.
EnergyThreshold calibrate_threshold(std::span<const double> noise_powers, double pfa);

// 1 iff power strictly exceeds the threshold; ties resolve to unoccupied.
int energy_decide(double power, const EnergyThreshold& th);

// Fraction of rows whose energy decision matches the label.
double energy_accuracy(std::span<const FeatureRow> rows, const EnergyThreshold& th);

} // namespace specsense::detect

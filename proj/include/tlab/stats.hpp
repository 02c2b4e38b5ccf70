#pragma once

#include <functional>
#include <vector>

#include "tlab/field.hpp"
#include "tlab/tracer.hpp"

namespace tlab {

struct FitResult {
    double slope = 0.0, intercept = 0.0, stderr_ = 0.0, r_squared = 0.0;
    int n_points = 0;
    double hurst = 0.0, hurst_stderr = 0.0;
    bool insufficient_span = false;
};

// Least squares of y on x; weights may be empty (ordinary LS, residual-based error)
// or inverse variances (error from the supplied variances).
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w = {});

FitResult estimate_hurst(const std::vector<MsdPoint>& msd);

// Leave-one-block-out jackknife. Each observation contributes a vector of additive
// sums; stat maps the (pooled) sums divided by the count to the statistic.
Estimate jackknife(const std::vector<std::vector<double>>& obs, int blocks,
                   const std::function<double(const std::vector<double>& means)>& stat);

struct MomentStats {
    long n = 0;
    Estimate mean, variance, m3, m4, skewness, excess_kurtosis;
    Estimate raw[5];  // raw moments E x^k, k = 1..4 (index 0 unused)
};

MomentStats cumulants(const std::vector<double>& x, int blocks = 20);

struct Comparison {
    double z = 0.0;
    bool pass = false;
};

Comparison compare_to_prediction(const Estimate& mc, const Estimate& exact);

}  // namespace tlab

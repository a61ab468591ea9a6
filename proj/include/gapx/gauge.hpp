#pragma once

#include <span>
#include <vector>

namespace gapx {

// Root-finder settings for the gauge. tol bounds the residual |C(x/lambda)-1|
// at the returned lambda.
struct GaugeConfig {
    double tol = 1e-12;
    int max_iter = 200;
    double max_abs_entry = 1e8;  // guard against x_j^{2j} overflow
};

// C(x) = sum_j x_j^{2j}, summed in descending term-magnitude order.
// Throws std::overflow_error if a term leaves the double range.
double series_C(std::span<const double> x);

// The gauge lambda(x): unique solution of C(x/lambda) = 1, found by
// bracketed bisection on [max|x_j|, 2 max|x_j|] plus Newton polish.
// Throws std::invalid_argument on the zero vector and on entries with
// |x_j| >= max_abs_entry.
double gauge_lambda(std::span<const double> x, const GaugeConfig& cfg = {});

// Independent verification oracle: 200 plain bisection steps, no derivative,
// no summation tricks. Agrees with gauge_lambda to ~1e-9 by construction.
double lambda_oracle(std::span<const double> x);

// Sparse entry of C: value with its positional exponent 2j kept explicit,
// so a pruned subsequence can still be evaluated exactly.
struct GaugeTerm {
    double value;       // x_j
    unsigned exponent;  // 2j (position-dependent)
};

// Gauge of a vector given as sparse terms. max_abs is ||x||_inf of the full
// vector; tail_bound is a certified upper bound on the total contribution of
// omitted terms at any mu >= max_abs (their sum is treated as an additive
// uncertainty on C, which must be far below tol).
double gauge_lambda_terms(std::span<const GaugeTerm> terms, double max_abs, double tail_bound,
                          const GaugeConfig& cfg = {});

}  // namespace gapx

#pragma once

#include <cstddef>
#include <vector>

namespace dfi {

double mean(const double* a, std::size_t n);
double mean(const std::vector<double>& a);

// Sample variance with the n-1 denominator; 0 for n < 2.
double sample_variance(const double* a, std::size_t n);
double sample_variance(const std::vector<double>& a);
double sample_sd(const std::vector<double>& a);

// Standard normal CDF, accurate to double precision via erfc.
double normal_cdf(double x);

// Standard normal quantile (inverse CDF), Wichura's PPND16 algorithm,
// relative error below 1e-15 on (0, 1).
double normal_quantile(double p);

}  // namespace dfi

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sgpe::stats {

struct Estimate
{
	double mean = 0.0;
	double se = 0.0;
};

double mean(std::span<const double> xs);
/// unbiased sample variance
double variance(std::span<const double> xs);

/// mean and standard error assuming independent samples
Estimate iid_estimate(std::span<const double> xs);

/**
 * Mean and standard error of a correlated series by non-overlapping batch
 * means. The batch count defaults to ~sqrt(n) clamped to [10, 200].
 */
Estimate batch_means(std::span<const double> xs, std::size_t batches = 0);

/// combines independent estimates of the same quantity (equal weights)
Estimate pool(std::span<const Estimate> parts);

/// z-score of the difference of two independent estimates
double z_score(const Estimate& a, const Estimate& b);

/// Gelman-Rubin split-R-hat over chains of equal length
double split_rhat(const std::vector<std::vector<double>>& chains);

struct LineFit
{
	double slope = 0.0;
	double intercept = 0.0;
};

/// ordinary least squares y = intercept + slope * x; needs >= 2 points
LineFit least_squares(std::span<const double> x, std::span<const double> y);

/// linear-interpolated quantile, q in [0,1]
double quantile(std::vector<double> xs, double q);

} // namespace sgpe::stats

#pragma once

#include "perfopt/distribution_maps.hpp"
#include "perfopt/losses.hpp"

#include <string>

namespace perfopt {

enum class TriState { yes, no, indeterminate };

std::string to_string(TriState t);

struct DominanceReport {
    Vector theta;
    Vector theta_prime;
    Vector theta0;
    double alpha = 0.5;
    double margin = 0.0;     // RHS - LHS
    double std_error = 0.0;  // of the paired differences
    TriState holds = TriState::indeterminate;
};

/// yes if margin >= -2 se, no if margin < -6 se, indeterminate otherwise.
TriState dominance_verdict(double margin, double std_error);

/// Spot check of E_{D(a th + (1-a) th')} l(z; th0) <= E_{a D(th) + (1-a) D(th')} l(z; th0).
/// The three distributions are sampled with one seed (common random
/// numbers) and the mixture expectation is taken with exact weights a, 1-a.
DominanceReport check_mixture_dominance(const DistributionMap& map, const Loss& loss, const Vector& theta,
                                        const Vector& theta_prime, const Vector& theta0, double alpha, std::size_t n,
                                        std::uint64_t seed);

struct CoupledPairs {
    Matrix z;        // draws from D(a th + (1-a) th'), column-wise
    Matrix z_prime;  // coupled draws from the mixture
    std::vector<int> branch;  // 1 if z' used th, 0 if th'
};

/// Convex-order coupling of a location-scale family: z' is z pushed through
/// the scale/location of a randomly chosen endpoint.
CoupledPairs coupled_sample(const LocationScaleMap& map, const Vector& theta, const Vector& theta_prime, double alpha,
                            std::size_t n, std::uint64_t seed);

struct ConditionalMeanCheck {
    double max_deviation = 0.0;  // max over bins of ||mean(z') - mean(z)||
    double max_ratio = 0.0;      // max over bins of deviation / bin std error
    std::size_t bins = 0;
    bool passes = true;          // every bin within 4 std errors
};

/// Binned test of E[z' | z] = z along the top principal direction of z.
ConditionalMeanCheck check_conditional_mean(const CoupledPairs& pairs, std::size_t bins);

}  // namespace perfopt

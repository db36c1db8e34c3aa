#pragma once

#include "perfopt/distribution_maps.hpp"
#include "perfopt/losses.hpp"

#include <string>
#include <utility>
#include <vector>

namespace perfopt {

struct RiskEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample stddev / sqrt(n)
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

/// Mean and standard error of a sample of values.
RiskEstimate summarize(const Vector& values, std::uint64_t seed = 0);

/// Monte Carlo PR(theta) = E_{z ~ D(theta)} l(z; theta).
RiskEstimate estimate_pr(const DistributionMap& map, const Loss& loss, const Vector& theta, std::size_t n,
                         std::uint64_t seed);

/// Monte Carlo DPR(deploy, evaluate) = E_{z ~ D(deploy)} l(z; evaluate).
RiskEstimate estimate_dpr(const DistributionMap& map, const Loss& loss, const Vector& deploy, const Vector& evaluate,
                          std::size_t n, std::uint64_t seed);

enum class Verdict { strongly_convex, convex, inconclusive };

std::string to_string(Verdict v);

struct ConvexityCertificate {
    double lambda = 0.0;
    std::string rule;                                    // "general" or "location_scale"
    std::vector<std::pair<std::string, double>> inputs;  // in argument order
    Verdict verdict = Verdict::inconclusive;
};

/// lambda = gamma - 2 eps beta.
ConvexityCertificate certify_general(double gamma, double beta, double eps);

/// lambda = max{gamma - beta^2/gamma_z (gamma_z > 0 only),
///              gamma - 2 eps beta + gamma_z (sigma_min_mu^2 + sigma_min_sigma^2)}.
ConvexityCertificate certify_location_scale(double gamma, double beta, double gamma_z, double eps,
                                            double sigma_min_mu, double sigma_min_sigma);

struct EmpiricalLambda {
    double lambda = 0.0;         // min over chords of the curvature estimate
    double max_std_error = 0.0;  // largest std error of a second difference
    double min_chord = 0.0;      // shortest chord length
    double tolerance = 0.0;      // 6 * max_std_error * 4 / min_chord^2
    double chord_tolerance = 0.0;  // 6 * std error * 4 / length^2 of the minimizing chord
    std::size_t chords = 0;
};

/// Curvature probe of PR along random chords of the domain:
/// min over chords of 4 (PR(a) + PR(b) - 2 PR((a+b)/2)) / ||a - b||^2.
/// The three risks of a chord share one seed, so the second difference is
/// estimated with common random numbers.
EmpiricalLambda empirical_lambda(const DistributionMap& map, const Loss& loss, const Domain& domain,
                                 std::size_t n_per_eval, std::size_t n_directions, std::uint64_t seed);

}  // namespace perfopt

#include "perfopt/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perfopt {

RiskEstimate summarize(const Vector& values, std::uint64_t seed) {
    RiskEstimate r;
    r.n = static_cast<std::size_t>(values.size());
    r.seed = seed;
    if (r.n == 0) throw ConfigError("cannot summarize an empty sample");
    // A constant sample is reported exactly; the summed mean can be off by an ulp.
    if (values.minCoeff() == values.maxCoeff()) {
        r.mean = values[0];
        return r;
    }
    r.mean = values.mean();
    if (r.n > 1) {
        const double var = (values.array() - r.mean).square().sum() / static_cast<double>(r.n - 1);
        r.std_error = std::sqrt(var / static_cast<double>(r.n));
    }
    return r;
}

RiskEstimate estimate_dpr(const DistributionMap& map, const Loss& loss, const Vector& deploy, const Vector& evaluate,
                          std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("risk estimate: n must be at least 1");
    if (map.param_dim() != loss.param_dim() || map.data_dim() != loss.data_dim())
        throw ConfigError("risk estimate: map and loss dimensions differ");
    loss.check_theta(evaluate);
    const SampleSet s = map.sample(deploy, n, seed);
    loss.check(s);
    return summarize(loss.values(s.values, evaluate), seed);
}

RiskEstimate estimate_pr(const DistributionMap& map, const Loss& loss, const Vector& theta, std::size_t n,
                         std::uint64_t seed) {
    return estimate_dpr(map, loss, theta, theta, n, seed);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::strongly_convex: return "strongly_convex";
        case Verdict::convex: return "convex";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

Verdict verdict_for(double lambda) {
    if (lambda > 0.0) return Verdict::strongly_convex;
    if (lambda == 0.0) return Verdict::convex;
    return Verdict::inconclusive;
}

void require_nonnegative(std::initializer_list<std::pair<const char*, double>> args) {
    for (const auto& [name, v] : args) {
        if (!(v >= 0.0)) throw DomainError(std::string("certificate input ") + name + " must be nonnegative");
    }
}

}  // namespace

ConvexityCertificate certify_general(double gamma, double beta, double eps) {
    require_nonnegative({{"gamma", gamma}, {"beta", beta}, {"eps", eps}});
    ConvexityCertificate c;
    c.rule = "general";
    c.inputs = {{"gamma", gamma}, {"beta", beta}, {"eps", eps}};
    c.lambda = gamma - 2.0 * eps * beta;
    c.verdict = verdict_for(c.lambda);
    return c;
}

ConvexityCertificate certify_location_scale(double gamma, double beta, double gamma_z, double eps,
                                            double sigma_min_mu, double sigma_min_sigma) {
    require_nonnegative({{"gamma", gamma},
                         {"beta", beta},
                         {"gamma_z", gamma_z},
                         {"eps", eps},
                         {"sigma_min_mu", sigma_min_mu},
                         {"sigma_min_sigma", sigma_min_sigma}});
    ConvexityCertificate c;
    c.rule = "location_scale";
    c.inputs = {{"gamma", gamma},       {"beta", beta},
                {"gamma_z", gamma_z},   {"eps", eps},
                {"sigma_min_mu", sigma_min_mu}, {"sigma_min_sigma", sigma_min_sigma}};
    double lambda = gamma - 2.0 * eps * beta +
                    gamma_z * (sigma_min_mu * sigma_min_mu + sigma_min_sigma * sigma_min_sigma);
    if (gamma_z > 0.0) lambda = std::max(lambda, gamma - beta * beta / gamma_z);
    c.lambda = lambda;
    c.verdict = verdict_for(lambda);
    return c;
}

EmpiricalLambda empirical_lambda(const DistributionMap& map, const Loss& loss, const Domain& domain,
                                 std::size_t n_per_eval, std::size_t n_directions, std::uint64_t seed) {
    if (n_per_eval == 0 || n_directions == 0) throw ConfigError("empirical_lambda: counts must be positive");
    if (map.param_dim() != loss.param_dim() || map.data_dim() != loss.data_dim())
        throw ConfigError("empirical_lambda: map and loss dimensions differ");
    const std::size_t d = map.param_dim();
    Rng rng(derive_seed(seed, "chords"));

    EmpiricalLambda out;
    out.lambda = std::numeric_limits<double>::infinity();
    out.min_chord = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_directions; ++k) {
        Vector a, b;
        do {
            a = uniform_in(domain, d, rng);
            b = uniform_in(domain, d, rng);
        } while ((a - b).norm() < 1e-8);
        const Vector mid = 0.5 * (a + b);
        const std::uint64_t s = derive_seed(seed, "chord", k);
        const Vector second = loss.values(map.sample(a, n_per_eval, s).values, a) +
                              loss.values(map.sample(b, n_per_eval, s).values, b) -
                              2.0 * loss.values(map.sample(mid, n_per_eval, s).values, mid);
        const RiskEstimate est = summarize(second);
        const double len2 = (a - b).squaredNorm();
        if (4.0 * est.mean / len2 < out.lambda) {
            out.lambda = 4.0 * est.mean / len2;
            out.chord_tolerance = 6.0 * est.std_error * 4.0 / len2;
        }
        out.max_std_error = std::max(out.max_std_error, est.std_error);
        out.min_chord = std::min(out.min_chord, std::sqrt(len2));
    }
    out.chords = n_directions;
    out.tolerance = 6.0 * out.max_std_error * 4.0 / (out.min_chord * out.min_chord);
    return out;
}

}  // namespace perfopt

#include "perfopt/dominance.hpp"

#include "perfopt/risk.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace perfopt {

std::string to_string(TriState t) {
    switch (t) {
        case TriState::yes: return "yes";
        case TriState::no: return "no";
        case TriState::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

TriState dominance_verdict(double margin, double std_error) {
    if (margin >= -2.0 * std_error) return TriState::yes;
    if (margin < -6.0 * std_error) return TriState::no;
    return TriState::indeterminate;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

}  // namespace

DominanceReport check_mixture_dominance(const DistributionMap& map, const Loss& loss, const Vector& theta,
                                        const Vector& theta_prime, const Vector& theta0, double alpha, std::size_t n,
                                        std::uint64_t seed) {
    check_alpha(alpha);
    if (n == 0) throw ConfigError("check_mixture_dominance: n must be at least 1");
    require_dim(theta, map.param_dim(), "dominance: theta");
    require_dim(theta_prime, map.param_dim(), "dominance: theta'");
    loss.check_theta(theta0);
    if (map.data_dim() != loss.data_dim()) throw ConfigError("dominance: map and loss dimensions differ");

    const Vector psi = alpha * theta + (1.0 - alpha) * theta_prime;
    const Vector lhs = loss.values(map.sample(psi, n, seed).values, theta0);
    const Vector at_theta = loss.values(map.sample(theta, n, seed).values, theta0);
    const Vector at_prime = loss.values(map.sample(theta_prime, n, seed).values, theta0);
    const RiskEstimate diff = summarize(alpha * at_theta + (1.0 - alpha) * at_prime - lhs, seed);

    DominanceReport r;
    r.theta = theta;
    r.theta_prime = theta_prime;
    r.theta0 = theta0;
    r.alpha = alpha;
    r.margin = diff.mean;
    r.std_error = diff.std_error;
    r.holds = dominance_verdict(r.margin, r.std_error);
    return r;
}

CoupledPairs coupled_sample(const LocationScaleMap& map, const Vector& theta, const Vector& theta_prime, double alpha,
                            std::size_t n, std::uint64_t seed) {
    check_alpha(alpha);
    if (n == 0) throw ConfigError("coupled_sample: n must be at least 1");
    require_dim(theta, map.param_dim(), "coupled_sample: theta");
    require_dim(theta_prime, map.param_dim(), "coupled_sample: theta'");

    const Vector psi = alpha * theta + (1.0 - alpha) * theta_prime;
    const Matrix a_psi = map.scale(psi);
    Eigen::JacobiSVD<Matrix> svd(a_psi);
    const Vector& sv = svd.singularValues();
    const double cond = sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff() : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12)) {
        throw NumericalError("coupled_sample: scale at the interpolated parameter is singular (condition number " +
                             std::to_string(cond) + ")");
    }

    CoupledPairs out;
    out.z = map.sample(psi, n, seed).values;
    out.branch.resize(n);
    Rng rng(derive_seed(seed, "branch"));
    for (auto& b : out.branch) b = rng.uniform() < alpha ? 1 : 0;

    if (theta == theta_prime) {
        out.z_prime = out.z;
        return out;
    }
    const Eigen::PartialPivLU<Matrix> lu(a_psi);
    const Matrix t_theta = map.scale(theta) * lu.inverse();
    const Matrix t_prime = map.scale(theta_prime) * lu.inverse();
    const Vector centre = map.offset() + map.location() * psi;
    const Vector shift_theta = map.offset() + map.location() * theta;
    const Vector shift_prime = map.offset() + map.location() * theta_prime;

    out.z_prime.resize(out.z.rows(), out.z.cols());
    for (Eigen::Index j = 0; j < out.z.cols(); ++j) {
        const Vector r = out.z.col(j) - centre;
        if (out.branch[static_cast<std::size_t>(j)])
            out.z_prime.col(j) = t_theta * r + shift_theta;
        else
            out.z_prime.col(j) = t_prime * r + shift_prime;
    }
    return out;
}

ConditionalMeanCheck check_conditional_mean(const CoupledPairs& pairs, std::size_t bins) {
    const auto n = static_cast<std::size_t>(pairs.z.cols());
    if (bins == 0) throw ConfigError("check_conditional_mean: bins must be positive");
    if (pairs.z_prime.rows() != pairs.z.rows() || pairs.z_prime.cols() != pairs.z.cols())
        throw ConfigError("check_conditional_mean: pair matrices differ in shape");
    if (n / bins < 50)
        throw ConfigError("check_conditional_mean: need at least 50 pairs per bin, got " + std::to_string(n / bins));

    const Vector mean = pairs.z.rowwise().mean();
    const Matrix centred = pairs.z.colwise() - mean;
    Eigen::SelfAdjointEigenSolver<Matrix> es(centred * centred.transpose());
    const Vector dir = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    const Vector proj = centred.transpose() * dir;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[static_cast<Eigen::Index>(a)] < proj[static_cast<Eigen::Index>(b)]; });

    ConditionalMeanCheck out;
    out.bins = bins;
    const Matrix diff = pairs.z_prime - pairs.z;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins;
        const std::size_t hi = (b + 1) * n / bins;
        const auto count = static_cast<double>(hi - lo);
        Vector sum = Vector::Zero(diff.rows());
        for (std::size_t i = lo; i < hi; ++i) sum += diff.col(static_cast<Eigen::Index>(order[i]));
        const Vector m = sum / count;
        Vector ss = Vector::Zero(diff.rows());
        for (std::size_t i = lo; i < hi; ++i)
            ss += (diff.col(static_cast<Eigen::Index>(order[i])) - m).array().square().matrix();
        const double se = std::sqrt(ss.sum() / (count - 1.0) / count);
        const double dev = m.norm();
        out.max_deviation = std::max(out.max_deviation, dev);
        if (dev > 0.0) out.max_ratio = std::max(out.max_ratio, se > 0.0 ? dev / se : std::numeric_limits<double>::infinity());
        if (dev > 4.0 * se) out.passes = false;
    }
    return out;
}

}  // namespace perfopt

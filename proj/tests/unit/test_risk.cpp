#include "perfopt/risk.hpp"
#include "perfopt/scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace perfopt;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// z ~ N(eps theta, 1) with the tracking loss 0.5 (z - theta)^2.
Scenario gauss_loc(double eps) { return gaussian_location_scenario(eps, 10.0, 1); }

}  // namespace

TEST_CASE("summarize") {
    const auto r = summarize(vec({1.0, 2.0, 3.0, 4.0}), 9);
    CHECK(r.mean == 2.5);
    CHECK(r.std_error == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(r.n == 4);
    CHECK(r.seed == 9);
    CHECK(summarize(vec({7.0})).std_error == 0.0);
}

TEST_CASE("estimate_pr on the point-mass quadratic is exact") {
    const auto s = quadratic_scenario(2.0, 1.0, 0.5, 10.0);
    const auto r = estimate_pr(*s.map, *s.loss, vec({1.0, 0.0}), 100, 3);
    CHECK(r.mean == 0.5);
    CHECK(r.std_error == 0.0);
    CHECK_THROWS_AS(estimate_pr(*s.map, *s.loss, vec({1.0, 0.0}), 0, 3), ConfigError);
}

TEST_CASE("estimate_pr gaussian location") {
    // 0.5 (eps - 1)^2 theta^2 + 0.5 = 5 at eps = 2, theta = 3 (tests/oracles/oracles.py).
    const auto s = gauss_loc(2.0);
    const auto r = estimate_pr(*s.map, *s.loss, vec({3.0}), 100000, 21);
    CHECK(std::abs(r.mean - 5.0) <= 5 * r.std_error);
    CHECK(s.pr(vec({3.0})) == 5.0);
}

TEST_CASE("estimate_pr is zero when the loss vanishes") {
    // y = theta^T x exactly: degenerate noise.
    Matrix mu = Matrix::Zero(2, 1);
    Matrix cov = Matrix::Zero(2, 2);
    const auto map = LocationScaleMap::location(mu, BaseDistribution::degenerate(vec({2.0, 1.0})), Vector::Zero(2), 1);
    const auto loss = squared_loss(1);
    CHECK(estimate_pr(*map, *loss, vec({0.5}), 10, 1).mean == 0.0);
}

TEST_CASE("estimate_dpr") {
    const auto q = quadratic_scenario(2.0, 1.0, 0.5, 10.0);
    CHECK(estimate_dpr(*q.map, *q.loss, vec({1.0, 0.0}), vec({0.0, 0.0}), 10, 1).mean == 0.0);

    const auto s = gauss_loc(1.0);
    const auto same = estimate_dpr(*s.map, *s.loss, vec({2.0}), vec({2.0}), 1000, 8);
    const auto pr = estimate_pr(*s.map, *s.loss, vec({2.0}), 1000, 8);
    CHECK(same.mean == pr.mean);
    CHECK(same.std_error == pr.std_error);

    // E 0.5 z^2 for z ~ N(2, 1) is 2.5 (tests/oracles/oracles.py).
    const auto r = estimate_dpr(*s.map, *s.loss, vec({2.0}), vec({0.0}), 100000, 4);
    CHECK(std::abs(r.mean - 2.5) <= 5 * r.std_error);
}

TEST_CASE("certify_general") {
    auto c = certify_general(2.0, 1.0, 0.5);
    CHECK(c.lambda == 1.0);
    CHECK(c.verdict == Verdict::strongly_convex);
    CHECK(c.rule == "general");
    c = certify_general(2.0, 1.0, 1.0);
    CHECK(c.lambda == 0.0);
    CHECK(c.verdict == Verdict::convex);
    c = certify_general(2.0, 1.0, 2.0);
    CHECK(c.lambda == -2.0);
    CHECK(c.verdict == Verdict::inconclusive);
    CHECK(to_string(c.verdict) == "inconclusive");
    CHECK_THROWS_AS(certify_general(-1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("certify_location_scale") {
    for (double eps : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        // Gaussian scale: sigma_min(Sigma) = eps, sigma_min(mu) = 0.
        const auto a = certify_location_scale(1.0, 1.0, 1.0, eps, 0.0, eps);
        CHECK(a.lambda == Approx((eps - 1) * (eps - 1)).margin(1e-15));
        CHECK(a.verdict != Verdict::inconclusive);
        // Gaussian location: sigma_min(mu) = eps.
        const auto b = certify_location_scale(1.0, 1.0, 1.0, eps, eps, 0.0);
        CHECK(b.lambda == Approx((eps - 1) * (eps - 1)).margin(1e-15));
    }
    // E x^2 = 2, E x = 1: first branch 2 - 1 = 1.
    const auto e = certify_location_scale(2.0, 1.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(e.lambda == 1.0);
    CHECK(e.inputs.size() == 6);
    // gamma_z = 0 disables the first branch.
    CHECK(certify_location_scale(2.0, 1.0, 0.0, 1.0, 0.0, 0.0).lambda == 0.0);
    CHECK_THROWS_AS(certify_location_scale(1.0, 1.0, -1.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("empirical lambda on the quadratic scenario is exact") {
    // Curvature 2 (gamma/2 - eps beta) (tests/oracles/oracles.py: quadratic_threshold).
    for (auto [gamma, eps, expected] : {std::tuple{2.0, 0.5, 1.0}, std::tuple{2.0, 2.0, -2.0}, std::tuple{1.0, 2.0, -3.0}}) {
        const auto s = quadratic_scenario(gamma, 1.0, eps, 10.0);
        const auto el = empirical_lambda(*s.map, *s.loss, s.domain, 10, 50, 3);
        CHECK(el.lambda == Approx(expected).epsilon(1e-9));
        CHECK(el.max_std_error == 0.0);
        CHECK(el.tolerance == 0.0);
    }
}

TEST_CASE("threshold sharpness on the quadratic scenario") {
    for (double f : {0.25, 0.5, 0.75, 1.25, 1.5}) {
        const double eps = f * 1.0;  // gamma / (2 beta) = 1
        const auto s = quadratic_scenario(2.0, 1.0, eps, 10.0);
        const auto el = empirical_lambda(*s.map, *s.loss, s.domain, 1, 20, 5);
        const double cert = certify_general(2.0, 1.0, eps).lambda;
        CHECK((el.lambda > 0) == (cert > 0));
        CHECK((el.lambda < 0) == (cert < 0));
    }
}

TEST_CASE("empirical lambda on the gaussian scale scenario") {
    // PR = 0.5 ((theta - mu)^2 + theta^2) has curvature 2 at mu = 1, eps = 1.
    const auto s = gaussian_scale_scenario(1.0, 1.0);
    const auto el = empirical_lambda(*s.map, *s.loss, s.domain, 20000, 30, 8);
    CHECK(el.lambda >= 0.0 - el.tolerance);
    CHECK(el.lambda == Approx(2.0).margin(el.tolerance + 0.05));
}

TEST_CASE("suboptimality is nonnegative in analytic scenarios") {
    Rng rng(77);
    for (const auto& s : {gaussian_scale_scenario(1.0, 1.0), gauss_loc(2.0), exponential_scale_scenario()}) {
        const double best = s.pr(*s.theta_po);
        for (int i = 0; i < 10; ++i) {
            const Vector th = uniform_in(s.domain, s.map->param_dim(), rng);
            const auto r = estimate_pr(*s.map, *s.loss, th, 20000, static_cast<std::uint64_t>(i));
            CHECK(r.mean - best >= -5 * r.std_error);
            CHECK(std::abs(r.mean - s.pr(th)) <= 5 * r.std_error + 1e-12);
        }
    }
}

#include "perfopt/optimizers.hpp"
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

Objective half_distance(const Vector& c) {
    return [c](const Vector& th, Vector* g) {
        if (g) *g = th - c;
        return 0.5 * (th - c).squaredNorm();
    };
}

}  // namespace

TEST_CASE("projected gd on a ball") {
    const Domain ball(1.0);
    const auto in = projected_gd(half_distance(vec({0.3, -0.2})), ball, vec({0.0, 0.0}));
    CHECK(in.converged);
    CHECK((in.theta - vec({0.3, -0.2})).norm() < 1e-5);

    const auto out = projected_gd(half_distance(vec({3.0, 4.0})), ball, vec({0.0, 0.0}));
    CHECK((out.theta - vec({0.6, 0.8})).norm() < 1e-5);
    CHECK(ball.contains(out.theta));
}

TEST_CASE("projected gd converges linearly on a strongly convex quadratic") {
    Matrix H = Matrix::Zero(2, 2);
    H.diagonal() << 1.0, 10.0;
    const Objective f = [&](const Vector& th, Vector* g) {
        if (g) *g = H * th;
        return 0.5 * th.dot(H * th);
    };
    PgdConfig cfg;
    cfg.tol = 1e-14;
    const auto r = projected_gd(f, Domain::unbounded(), vec({5.0, -3.0}), cfg);
    CHECK(r.converged);
    CHECK(r.theta.norm() < 1e-5);
    // Condition number 10: a few hundred iterations at most.
    CHECK(r.iterations < 500);

    cfg.max_iter = 3;
    const auto cut = projected_gd(f, Domain::unbounded(), vec({5.0, -3.0}), cfg);
    CHECK_FALSE(cut.converged);
    CHECK(cut.value < f(vec({5.0, -3.0}), nullptr));
}

TEST_CASE("minimize_quadratic matches projection for isotropic forms") {
    QuadraticForm q(2);
    q.H = Matrix::Identity(2, 2);
    q.g = -vec({3.0, 4.0});
    const auto sol = minimize_quadratic(q, Domain(1.0));
    REQUIRE(sol);
    CHECK((*sol - vec({0.6, 0.8})).norm() < 1e-8);
    const auto inside = minimize_quadratic(q, Domain(10.0));
    REQUIRE(inside);
    CHECK((*inside - vec({3.0, 4.0})).norm() < 1e-10);
}

TEST_CASE("estimate_location is exact without noise") {
    Rng rng(3);
    Matrix mu(2, 3);
    mu << 1.0, -2.0, 0.5, 0.0, 3.0, 1.0;
    const Vector mu0 = vec({0.5, -1.0});
    Matrix th(3, 50);
    for (Eigen::Index j = 0; j < th.cols(); ++j) th.col(j) = standard_normal(rng, 3);
    const Matrix z = (mu * th).colwise() + mu0;
    const auto fit = estimate_location(th, z);
    CHECK((fit.mu_hat - mu).norm() < 1e-10);
    CHECK((fit.intercept - mu0).norm() < 1e-10);
    CHECK(fit.residual_norm < 1e-9);
    CHECK_FALSE(fit.rank_deficient);
}

TEST_CASE("estimate_location residuals are orthogonal to the design") {
    Rng rng(4);
    Matrix th(2, 400), z(2, 400);
    for (Eigen::Index j = 0; j < th.cols(); ++j) {
        th.col(j) = standard_normal(rng, 2);
        z.col(j) = vec({2.0 * th(0, j), 1.0}) + standard_normal(rng, 2);
    }
    const auto fit = estimate_location(th, z, {1});
    CHECK(fit.residuals.rowwise().sum().norm() < 1e-9);
    CHECK((fit.residuals.row(0) * th.transpose()).norm() < 1e-9);
    // Static row: slope pinned to zero.
    CHECK(fit.mu_hat.row(1).isZero());
    CHECK(fit.mu_hat(0, 0) == Approx(2.0).margin(0.2));

    CHECK_THROWS_AS(estimate_location(th, z.leftCols(10)), ConfigError);
    CHECK_THROWS_AS(estimate_location(th.leftCols(2), z.leftCols(2)), ConfigError);
    CHECK_THROWS_AS(estimate_location(th, z, {5}), ConfigError);
}

TEST_CASE("two-stage recovers a deterministic map exactly") {
    const auto s = quadratic_scenario(2.0, 1.0, 0.5, 10.0);
    TwoStageEstimate est;
    const auto rec = two_stage(*s.map, *s.loss, s.domain, 200, 1, {}, &est);
    CHECK((est.mu_hat - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-10);
    CHECK(rec.samples_used == 200);
    // PR = 0.5 |theta|^2: optimum at zero.
    CHECK(rec.final_theta.norm() < 1e-6);
    CHECK_THROWS_AS(two_stage(*s.map, *s.loss, s.domain, 4, 1), ConfigError);
    TwoStageConfig bad;
    bad.model = "spline";
    CHECK_THROWS_AS(two_stage(*s.map, *s.loss, s.domain, 200, 1, bad), ConfigError);
}

TEST_CASE("two-stage finds the performative optimum of the gaussian location model") {
    const auto s = gaussian_location_scenario(3.0, 10.0);
    const auto rec = two_stage(*s.map, *s.loss, s.domain, 100000, 7);
    CHECK(std::abs(rec.final_theta[0]) < 0.05);
    CHECK(rec.trace.size() == 1);
}

TEST_CASE("dfo gradient estimate is unbiased for the smoothed risk in one dimension") {
    // PR = 0.5 ((eps - 1)^2 theta^2 + 1); symmetric differences are exact for quadratics.
    const auto s = gaussian_location_scenario(2.0, 10.0);
    double sum = 0.0;
    const int reps = 4000;
    for (int k = 0; k < reps; ++k) {
        Vector u;
        const Vector g = dfo_gradient_estimate(*s.map, *s.loss, vec({1.0}), 0.5, 2000, static_cast<std::uint64_t>(k), &u);
        CHECK(std::abs(u[0]) == 1.0);
        sum += g[0];
    }
    CHECK(sum / reps == Approx(1.0).margin(0.1));
    CHECK_THROWS_AS(dfo_gradient_estimate(*s.map, *s.loss, vec({1.0}), 0.0, 10, 0), ConfigError);
}

TEST_CASE("dfo on the convex quadratic scenario") {
    const auto s = quadratic_scenario(2.0, 1.0, 0.5, 10.0);
    DfoConfig cfg;
    cfg.batch = 1;
    cfg.step = StepSchedule{StepSchedule::Kind::inv, 1.0, 0.0};
    const auto rec = dfo(*s.map, *s.loss, s.domain, 100000, 3, cfg);
    CHECK(s.pr(rec.final_theta) - s.pr(*s.theta_po) < 0.1);
    CHECK(rec.samples_used == 100000);

    cfg.delta = 10.0;
    CHECK_THROWS_AS(dfo(*s.map, *s.loss, s.domain, 100, 3, cfg), ConfigError);
}

TEST_CASE("greedy sgd converges to the stable point") {
    // gamma = 2, beta = 1, eps = 1.5: PR is concave but the stable point 0 attracts.
    const auto s = quadratic_scenario(2.0, 1.0, 1.5, 10.0);
    GreedySgdConfig cfg;
    cfg.theta0 = vec({3.0, -2.0});
    const auto rec = greedy_sgd(*s.map, *s.loss, s.domain, 5000, 1, cfg);
    CHECK(rec.final_theta.norm() < 1e-3);

    // Static map: the running estimate tracks E z = 0.
    const auto st = gaussian_location_scenario(0.0, 10.0);
    const auto r2 = greedy_sgd(*st.map, *st.loss, st.domain, 100000, 2);
    CHECK(std::abs(r2.final_theta[0]) < 0.05);
}

TEST_CASE("lazy sgd sample accounting") {
    const auto s = gaussian_location_scenario(0.0, 10.0);
    const auto rec = lazy_sgd(*s.map, *s.loss, s.domain, 100, 1);
    CHECK(rec.samples_used == 100);
    std::vector<std::size_t> got;
    for (const auto& p : rec.trace) got.push_back(p.samples);
    // 1, 4, 9, 16, 25, 36, then 9 of the next 49.
    CHECK(got == std::vector<std::size_t>{0, 1, 5, 14, 30, 55, 91, 100});

    const auto big = lazy_sgd(*s.map, *s.loss, s.domain, 100000, 2);
    CHECK(std::abs(big.final_theta[0]) < 0.05);
    CHECK_THROWS_AS(lazy_sgd(*s.map, *s.loss, s.domain, 10, 1, LazySgdConfig{0.0, 1.0, std::nullopt}), ConfigError);
}

TEST_CASE("rrm contracts at rate eps on a deterministic location map") {
    const auto map = point_mass_map(1, 0.5);
    const auto loss = tracking_loss(1);
    RrmConfig cfg;
    cfg.iterations = 8;
    cfg.n_per_iter = 5;
    cfg.theta0 = vec({4.0});
    const auto rec = rrm(*map, *loss, Domain(10.0), 1, cfg);
    REQUIRE(rec.trace.size() == 9);
    for (std::size_t t = 0; t < rec.trace.size(); ++t)
        CHECK(rec.trace[t].theta[0] == Approx(4.0 * std::pow(0.5, static_cast<double>(t))).margin(1e-9));
    CHECK(rec.samples_used == 40);
}

TEST_CASE("rrm on the gaussian scale scenario reaches the stable point") {
    const auto s = gaussian_scale_scenario(1.0, 1.0);
    RrmConfig cfg;
    cfg.iterations = 10;
    cfg.n_per_iter = 20000;
    const auto rec = rrm(*s.map, *s.loss, s.domain, 5, cfg);
    CHECK(rec.final_theta[0] == Approx((*s.theta_ps)[0]).margin(0.05));
}

TEST_CASE("rrm keeps every point of the exponential scale model fixed") {
    // E[x y] / E[x^2] = theta: each theta is its own retraining fixed point.
    const auto s = exponential_scale_scenario();
    RrmConfig cfg;
    cfg.iterations = 5;
    cfg.n_per_iter = 200000;
    cfg.theta0 = vec({2.0});
    const auto rec = rrm(*s.map, *s.loss, s.domain, 6, cfg);
    CHECK(rec.final_theta[0] == Approx(2.0).margin(0.1));
}

TEST_CASE("iterates stay feasible and budgets are audited") {
    const auto s = quadratic_scenario(2.0, 1.0, 1.5, 2.0);
    auto counted = std::make_shared<CountingMap>(s.map);
    const std::vector<std::size_t> cps{10, 100, 1000};

    auto check = [&](const RunRecord& r, const Domain& dom) {
        CHECK(counted->count() == r.samples_used);
        for (const auto& p : r.trace) CHECK(dom.contains(p.theta));
        counted->reset();
    };
    check(greedy_sgd(*counted, *s.loss, s.domain, 1000, 1, {}, cps), s.domain);
    check(lazy_sgd(*counted, *s.loss, s.domain, 1000, 1, {}, cps), s.domain);
    DfoConfig dc;
    dc.step = StepSchedule{StepSchedule::Kind::constant, 5.0, 0.0};
    check(dfo(*counted, *s.loss, s.domain, 1000, 1, dc, cps), s.domain.shrunk(1.0));
    check(two_stage(*counted, *s.loss, s.domain, 1000, 1), s.domain);
    RrmConfig rc;
    rc.iterations = 4;
    rc.n_per_iter = 50;
    check(rrm(*counted, *s.loss, s.domain, 1, rc, cps), s.domain);
}

TEST_CASE("checkpoint traces keep the last state before each checkpoint") {
    const auto s = gaussian_location_scenario(0.5, 10.0);
    const auto rec = greedy_sgd(*s.map, *s.loss, s.domain, 1000, 1, {}, {10, 100, 1000});
    REQUIRE(rec.at(10));
    CHECK(rec.at(10)->samples == 10);
    CHECK(rec.at(100)->samples == 100);
    CHECK(rec.at(1000)->samples == 1000);
    CHECK(rec.at(50)->samples == 10);
    CHECK(rec.trace.size() == 3);
    CHECK(rec.at(5) == nullptr);
}

TEST_CASE("runs are deterministic in the seed") {
    const auto s = gaussian_location_scenario(0.5, 10.0);
    const auto a = lazy_sgd(*s.map, *s.loss, s.domain, 2000, 9);
    const auto b = lazy_sgd(*s.map, *s.loss, s.domain, 2000, 9);
    const auto c = lazy_sgd(*s.map, *s.loss, s.domain, 2000, 10);
    CHECK(a.final_theta == b.final_theta);
    CHECK(a.final_theta != c.final_theta);
    const auto d1 = dfo(*s.map, *s.loss, s.domain, 2000, 9);
    const auto d2 = dfo(*s.map, *s.loss, s.domain, 2000, 9);
    CHECK(d1.final_theta == d2.final_theta);
}

TEST_CASE("step schedules") {
    CHECK(StepSchedule{StepSchedule::Kind::inv_sqrt, 2.0, 0.0}.at(4) == 1.0);
    CHECK(StepSchedule{StepSchedule::Kind::inv, 2.0, 2.0}.at(2) == 0.5);
    CHECK(StepSchedule{StepSchedule::Kind::constant, 0.3, 0.0}.at(100) == 0.3);
    CHECK(StepSchedule::parse("inv", 1.0, 0.0).kind == StepSchedule::Kind::inv);
    CHECK_THROWS_AS(StepSchedule::parse("cosine", 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(StepSchedule::parse("inv", 0.0, 0.0), ConfigError);
}

#include "perfopt/scenarios.hpp"

#include "perfopt/optimizers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace perfopt {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

Domain make_domain(double radius, bool nonnegative = false) {
    if (std::isinf(radius) && radius > 0.0) return Domain(radius, nonnegative);
    if (!(radius > 0.0)) throw ConfigError("scenario radius must be positive");
    return Domain(radius, nonnegative);
}

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

std::string text(double v) { return format_double(v); }

}  // namespace

ConvexityCertificate Scenario::certificate() const {
    const auto& c = constants;
    if (c.rule == "location_scale")
        return certify_location_scale(c.gamma, c.beta, c.gamma_z, c.epsilon, c.sigma_min_location, c.sigma_min_scale);
    return certify_general(c.gamma, c.beta, c.epsilon);
}

double Scenario::accuracy(const Vector& theta, std::size_t n, std::uint64_t seed) const {
    const auto split = map->split();
    if (!split || *split != map->data_dim() - 1) throw UnsupportedError(id + ": accuracy needs (x, y) instances");
    const Matrix z = map->sample(theta, n, seed).values;
    const Vector s = z.topRows(idx(*split)).transpose() * theta;
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double pred = s[j] > 0.0 ? 1.0 : 0.0;
        if (pred == z(idx(*split), j)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

// Composite Simpson on +-12 tau.
double mean_sigmoid_slope(double tau) {
    if (tau == 0.0) return 0.25;
    const int n = 4000;
    const double lo = -12.0 * tau;
    const double h = 24.0 * tau / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = lo + i * h;
        const double p = sigmoid(s);
        const double f = p * (1.0 - p) * std::exp(-0.5 * (s / tau) * (s / tau));
        acc += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return acc * h / 3.0 / (tau * std::sqrt(2.0 * std::numbers::pi));
}

// ---------------------------------------------------------------------------

Scenario quadratic_scenario(double gamma, double beta, double eps, double radius, std::size_t d) {
    if (!(gamma > 0.0) || !(beta > 0.0)) throw ConfigError("quadratic scenario: gamma and beta must be positive");
    if (!(eps >= 0.0)) throw ConfigError("quadratic scenario: eps must be nonnegative");
    if (d == 0) throw ConfigError("quadratic scenario: d must be at least 1");
    Scenario s;
    s.id = "quadratic";
    s.map = point_mass_map(d, eps);
    s.loss = quadratic_example_loss(d, beta, gamma);
    s.domain = make_domain(radius);
    s.constants = {gamma, beta, 0.0, eps, 0.0, 0.0, "general"};
    s.default_theta0 = Vector::Ones(idx(d));
    const double curv = 0.5 * gamma - eps * beta;
    s.pr = [curv](const Vector& t) { return curv * t.squaredNorm(); };
    if (curv >= 0.0) {
        s.theta_po = Vector::Zero(idx(d));
    } else if (s.domain.bounded()) {
        Vector t = Vector::Zero(idx(d));
        t[0] = s.domain.radius();  // any boundary point is optimal
        s.theta_po = t;
    }
    if (eps * beta == gamma) {
        s.metadata.emplace_back("stable_point", "not unique (eps = gamma/beta)");
    } else {
        s.theta_ps = Vector::Zero(idx(d));
    }
    s.metadata.emplace_back("map", "point mass at eps*theta");
    return s;
}

Scenario gaussian_location_scenario(double eps, double radius, std::size_t d) {
    if (!(eps >= 0.0)) throw ConfigError("gaussian location scenario: eps must be nonnegative");
    if (d == 0) throw ConfigError("gaussian location scenario: d must be at least 1");
    const auto n = idx(d);
    Scenario s;
    s.id = "gaussian_location";
    s.map = LocationScaleMap::location(eps * Matrix::Identity(n, n),
                                       BaseDistribution::gaussian(Vector::Zero(n), Matrix::Identity(n, n)),
                                       Vector::Zero(n));
    s.loss = tracking_loss(d);
    s.domain = make_domain(radius);
    s.constants = {1.0, 1.0, 1.0, eps, eps, 0.0, "location_scale"};
    s.default_theta0 = Vector::Ones(n);
    const double a = 0.5 * (eps - 1.0) * (eps - 1.0);
    const double v = 0.5 * static_cast<double>(d);
    s.pr = [a, v](const Vector& t) { return a * t.squaredNorm() + v; };
    s.theta_po = Vector::Zero(n);
    if (eps != 1.0) s.theta_ps = Vector::Zero(n);
    else s.metadata.emplace_back("stable_point", "every theta (eps = 1)");
    return s;
}

Scenario gaussian_scale_scenario(double mu, double eps, double radius, double q, double z_star) {
    if (!(q >= 0.0)) throw ConfigError("gaussian scale scenario: q must be nonnegative");
    Scenario s;
    s.id = "gaussian_scale";
    s.map = gaussian_scale_map(mu, eps);
    s.loss = q > 0.0 ? regularized_loss(tracking_loss(1), Vector::Constant(1, z_star), Matrix::Constant(1, 1, q))
                     : tracking_loss(1);
    s.domain = make_domain(radius);
    s.constants = {1.0, 1.0, 1.0 + 2.0 * q, eps, 0.0, eps, "location_scale"};
    s.default_theta0 = Vector::Zero(1);
    s.pr = [mu, eps, q, z_star](const Vector& t) {
        const double th = t[0];
        return 0.5 * (eps * eps * th * th + (mu - th) * (mu - th)) +
               q * (eps * eps * th * th + (mu - z_star) * (mu - z_star));
    };
    s.theta_po = s.domain.project(Vector::Constant(1, mu / (1.0 + eps * eps * (1.0 + 2.0 * q))));
    s.theta_ps = s.domain.project(Vector::Constant(1, mu));
    s.two_stage_model = "location_scale";
    if (q > 0.0) s.metadata.emplace_back("regularizer", "q*(z - z*)^2, q=" + text(q) + ", z*=" + text(z_star));
    return s;
}

Scenario exponential_scale_scenario(double rate, double radius) {
    if (!(rate > 0.0)) throw ConfigError("exponential scenario: rate must be positive");
    const double ex = 1.0 / rate;
    const double ex2 = 2.0 / (rate * rate);
    // z0 = (x - Ex, x E - Ex), x ~ Exp(rate), E ~ Exp(1): zero mean.
    auto sampler = [rate, ex](std::size_t n, Rng& rng) {
        Matrix out(2, idx(n));
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            const double x = -std::log1p(-rng.uniform()) / rate;
            const double e = -std::log1p(-rng.uniform());
            out(0, j) = x - ex;
            out(1, j) = x * e - ex;
        }
        return out;
    };
    Matrix cov(2, 2);
    cov << 1.0, 1.0, 1.0, 3.0;
    cov /= rate * rate;
    auto base = BaseDistribution::custom("exponential_product", sampler, Vector::Zero(2), cov);

    Matrix sigma0 = Matrix::Zero(2, 2);
    sigma0(0, 0) = 1.0;
    Matrix slice = Matrix::Zero(2, 2);
    slice(1, 1) = 1.0;
    Matrix mu(2, 1);
    mu << 0.0, ex;
    Vector offset(2);
    offset << ex, 0.0;

    Scenario s;
    s.id = "exponential_scale";
    s.map = std::make_shared<LocationScaleMap>(mu, std::vector<Matrix>{slice}, sigma0, offset, std::move(base), 1);
    // Only y responds to theta; constants are the x-averaged ones.
    s.loss = squared_loss(1, ex2, ex);
    s.domain = make_domain(radius, true);
    s.constants = {ex2, ex, 1.0, ex, 0.0, 0.0, "location_scale"};
    s.default_theta0 = Vector::Ones(1);
    s.pr = [ex2](const Vector& t) { return 0.5 * ex2 * t[0] * t[0]; };
    s.theta_po = Vector::Zero(1);
    s.metadata.emplace_back("stable_point", "every theta");
    s.metadata.emplace_back("x_distribution", "Exp(rate=" + text(rate) + ")");
    return s;
}

Scenario election_linreg_scenario(std::size_t d, double eps, std::uint64_t seed, double radius) {
    if (d == 0) throw ConfigError("election scenario: d must be at least 1");
    if (!(eps >= 0.0)) throw ConfigError("election scenario: eps must be nonnegative");
    const auto n = idx(d);
    const double noise = 0.01;
    Rng rng(derive_seed(seed, "election"));

    Matrix g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
    Vector lam(n);
    for (Eigen::Index i = 0; i < n; ++i) lam[i] = 0.1 + 0.9 * rng.uniform();
    lam *= 0.01 / lam.maxCoeff();
    Matrix sx = Q * lam.asDiagonal() * Q.transpose();
    sx = 0.5 * (sx + sx.transpose());

    const Vector beta = standard_normal(rng, d);
    const Vector mu = eps * unit_sphere(rng, d);

    Matrix cov(n + 1, n + 1);
    cov.topLeftCorner(n, n) = sx;
    cov.topRightCorner(n, 1) = sx * beta;
    cov.bottomLeftCorner(1, n) = (sx * beta).transpose();
    cov(n, n) = beta.dot(sx * beta) + noise;
    Matrix loc = Matrix::Zero(n + 1, n);
    loc.row(n) = mu.transpose();

    Scenario s;
    s.id = "election_linreg";
    s.map = LocationScaleMap::location(loc, BaseDistribution::gaussian(Vector::Zero(n + 1), cov), Vector::Zero(n + 1), d);
    const double gamma = Eigen::SelfAdjointEigenSolver<Matrix>(sx, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    s.loss = squared_loss(d, gamma, 0.0);
    s.domain = make_domain(radius);
    s.constants = {gamma, 0.0, 1.0, eps, 0.0, 0.0, "location_scale"};
    s.default_theta0 = Vector::Ones(n);
    s.pr = [sx, beta, mu, noise](const Vector& t) {
        const Vector r = beta - t;
        const double shift = mu.dot(t);
        return 0.5 * (r.dot(sx * r) + shift * shift + noise);
    };
    QuadraticForm q(d);
    q.H = sx + mu * mu.transpose();
    q.g = -(sx * beta);
    s.theta_po = minimize_quadratic(q, s.domain);
    s.theta_ps = s.domain.project(beta);
    for (std::size_t i = 0; i < d; ++i) s.static_rows.push_back(i);
    s.metadata = {{"sigma_x", "Q diag(l) Q^T, Haar Q, l ~ U[0.1,1] scaled to max 0.01"},
                  {"sigma_y2", text(noise)},
                  {"base_covariance", "analytic"}};
    return s;
}

Scenario strategic_classification_scenario(std::size_t d, double eps, double lambda_reg, std::uint64_t seed,
                                           double radius) {
    if (d == 0) throw ConfigError("strategic scenario: d must be at least 1");
    if (!(eps >= 0.0)) throw ConfigError("strategic scenario: eps must be nonnegative");
    const auto n = idx(d);
    Rng rng(derive_seed(seed, "strategic"));
    const Vector truth = standard_normal(rng, d);

    auto sampler = [truth, n](std::size_t count, Rng& r) {
        Matrix out(n + 1, idx(count));
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            for (Eigen::Index i = 0; i < n; ++i) out(i, j) = r.normal();
            const double p = sigmoid(out.col(j).head(n).dot(truth));
            out(n, j) = r.uniform() < p ? 1.0 : 0.0;
        }
        return out;
    };
    // Cov(x, y) = E[x sigmoid(x^T b)] = b E[sigmoid'(s)] by Gaussian integration by parts.
    Matrix cov = Matrix::Identity(n + 1, n + 1);
    const Vector cross = truth * mean_sigmoid_slope(truth.norm());
    cov.topRightCorner(n, 1) = cross;
    cov.bottomLeftCorner(1, n) = cross.transpose();
    cov(n, n) = 0.25;
    Vector mean = Vector::Zero(n + 1);
    mean[n] = 0.5;  // x^T b is symmetric about 0

    const std::size_t strategic = (d + 1) / 2;
    Matrix loc = Matrix::Zero(n + 1, n);
    for (std::size_t i = 0; i < strategic; ++i) loc(idx(i), idx(i)) = eps;

    Scenario s;
    s.id = "strategic_classification";
    s.map = LocationScaleMap::location(loc, BaseDistribution::custom("logistic_population", sampler, mean, cov),
                                       Vector::Zero(n + 1), d);
    const double beta = 0.25 * std::sqrt(static_cast<double>(d));
    s.loss = regularized_logistic_loss(d, lambda_reg, beta);
    s.domain = make_domain(radius);
    s.constants = {lambda_reg, beta, 0.0, eps, 0.0, 0.0, "general"};
    s.default_theta0 = Vector::Zero(n);
    s.metric = "accuracy";
    s.static_rows = {d};
    s.metadata = {{"population", "synthetic: x ~ N(0, I), y ~ Bernoulli(sigmoid(x^T b)), b ~ N(0, I)"},
                  {"strategic_features", "first " + std::to_string(strategic)},
                  {"beta", "0.25*sqrt(d) declared bound"},
                  {"base_covariance", "analytic"}};
    return s;
}

// ---------------------------------------------------------------------------

const std::vector<ScenarioInfo>& list_scenarios() {
    static const std::vector<ScenarioInfo> all = {
        {"quadratic", "point mass at eps*theta, loss -beta theta^T z + gamma/2 |theta|^2",
         {{"gamma", 2.0}, {"beta", 1.0}, {"epsilon", 0.5}, {"R", 10.0}, {"d", 2.0}}, false},
        {"gaussian_location", "z ~ N(eps*theta, I), loss 0.5 |z - theta|^2",
         {{"epsilon", 2.0}, {"R", 10.0}, {"d", 1.0}}, false},
        {"gaussian_scale", "z ~ N(mu, eps^2 theta^2), loss 0.5 (z - theta)^2 + q (z - z_star)^2",
         {{"mu", 1.0}, {"epsilon", 1.0}, {"R", 10.0}, {"q", 0.0}, {"z_star", 0.0}}, false},
        {"exponential_scale", "x ~ Exp(rate), y ~ theta x Exp(1), squared loss, theta >= 0",
         {{"rate", 1.0}, {"R", 10.0}}, false},
        {"election_linreg", "y = beta^T x + mu^T theta + noise, squared loss",
         {{"d", 20.0}, {"epsilon", 100.0}, {"R", 10.0}}, true},
        {"strategic_classification", "logistic population with best-response shift x + eps B theta",
         {{"d", 11.0}, {"epsilon", 100.0}, {"lambda", 0.002}, {"R", 10.0}}, true},
    };
    return all;
}

Scenario make_scenario(const std::string& id, const ScenarioParams& params, std::uint64_t seed) {
    const ScenarioInfo* info = nullptr;
    for (const auto& s : list_scenarios())
        if (s.id == id) info = &s;
    if (!info) throw ConfigError("unknown scenario '" + id + "'");
    ScenarioParams p = info->defaults;
    for (const auto& [k, v] : params) {
        if (!p.count(k)) {
            std::string allowed;
            for (const auto& [name, _] : info->defaults) allowed += (allowed.empty() ? "" : ", ") + name;
            throw ConfigError("scenario '" + id + "' has no parameter '" + k + "' (allowed: " + allowed + ")");
        }
        p[k] = v;
    }
    auto count = [&](const char* key) {
        const double v = p.at(key);
        if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
            throw ConfigError("scenario parameter '" + std::string(key) + "' must be a positive integer");
        return static_cast<std::size_t>(v);
    };

    if (id == "quadratic") return quadratic_scenario(p["gamma"], p["beta"], p["epsilon"], p["R"], count("d"));
    if (id == "gaussian_location") return gaussian_location_scenario(p["epsilon"], p["R"], count("d"));
    if (id == "gaussian_scale") return gaussian_scale_scenario(p["mu"], p["epsilon"], p["R"], p["q"], p["z_star"]);
    if (id == "exponential_scale") return exponential_scale_scenario(p["rate"], p["R"]);
    if (id == "election_linreg") return election_linreg_scenario(count("d"), p["epsilon"], seed, p["R"]);
    return strategic_classification_scenario(count("d"), p["epsilon"], p["lambda"], seed, p["R"]);
}

double closed_form_reference(const Scenario& s, const Vector& theta) {
    if (!s.pr) throw UnsupportedError("scenario '" + s.id + "' has no closed-form performative risk");
    require_dim(theta, s.map->param_dim(), "closed_form_reference: theta");
    return s.pr(theta);
}

Vector closed_form_optimum(const Scenario& s) {
    if (!s.theta_po) throw UnsupportedError("scenario '" + s.id + "' has no closed-form performative optimum");
    return *s.theta_po;
}

}  // namespace perfopt

#include "perfopt/optimizers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace perfopt {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void check_pair(const DistributionMap& map, const Loss& loss) {
    if (map.param_dim() != loss.param_dim() || map.data_dim() != loss.data_dim())
        throw ConfigError("optimizer: map and loss dimensions differ");
    if (loss.required_split() && map.split() != loss.required_split())
        throw ConfigError("optimizer: map does not produce the feature/label split the loss needs");
}

Vector initial_point(const std::optional<Vector>& theta0, std::size_t d, const Domain& domain) {
    Vector t = theta0 ? *theta0 : Vector::Zero(idx(d));
    require_dim(t, d, "theta0");
    require_finite(t, "theta0");
    return domain.project(t);
}

}  // namespace

// ---------------------------------------------------------------------------

bool RunRecord::flagged(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

const TracePoint* RunRecord::at(std::size_t budget) const {
    const TracePoint* best = nullptr;
    for (const auto& p : trace) {
        if (p.samples > budget) break;
        best = &p;
    }
    return best;
}

TraceRecorder::TraceRecorder(std::vector<std::size_t> checkpoints) : checkpoints_(std::move(checkpoints)) {
    if (!std::is_sorted(checkpoints_.begin(), checkpoints_.end()))
        throw ConfigError("trace checkpoints must be increasing");
}

void TraceRecorder::record(std::size_t samples, const Vector& theta) {
    if (!trace_.empty() && samples <= trace_.back().samples) throw ConfigError("trace samples must increase");
    if (checkpoints_.empty()) {
        trace_.push_back({samples, theta, std::nullopt});
        return;
    }
    while (next_ < checkpoints_.size() && samples > checkpoints_[next_]) {
        if (pending_ && (trace_.empty() || trace_.back().samples != pending_->samples)) trace_.push_back(*pending_);
        ++next_;
    }
    if (pending_ && samples <= pending_->samples) throw ConfigError("trace samples must increase");
    pending_ = TracePoint{samples, theta, std::nullopt};
}

std::vector<TracePoint> TraceRecorder::finish() {
    if (pending_ && (trace_.empty() || trace_.back().samples != pending_->samples)) trace_.push_back(*pending_);
    pending_.reset();
    return std::move(trace_);
}

// ---------------------------------------------------------------------------

PgdResult projected_gd(const Objective& f, const Domain& domain, const Vector& theta0, const PgdConfig& cfg) {
    if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0) || !(cfg.armijo > 0.0 && cfg.armijo < 1.0) || cfg.max_iter == 0)
        throw ConfigError("projected_gd: invalid configuration");
    PgdResult r;
    r.theta = domain.project(theta0);
    Vector g;
    r.value = f(r.theta, &g);
    if (!std::isfinite(r.value) || !g.allFinite()) throw NumericalError("projected_gd: non-finite objective at start");
    double step = cfg.initial_step;

    for (r.iterations = 1; r.iterations <= cfg.max_iter; ++r.iterations) {
        Vector next;
        Vector next_g;
        double next_value = 0.0;
        bool accepted = false;
        while (step > 1e-300) {
            next = domain.project(r.theta - step * g);
            const Vector d = next - r.theta;
            if (d.squaredNorm() == 0.0) {
                r.converged = true;  // projected-stationary
                return r;
            }
            next_value = f(next, &next_g);
            if (std::isfinite(next_value) && next_value <= r.value + cfg.armijo * g.dot(d)) {
                accepted = true;
                break;
            }
            step *= cfg.shrink;
        }
        if (!accepted) {
            r.converged = true;  // no descent left at machine precision
            return r;
        }
        const double improvement = r.value - next_value;
        r.theta = std::move(next);
        r.value = next_value;
        g = std::move(next_g);
        if (improvement < cfg.tol) {
            r.converged = true;
            return r;
        }
        step = std::min(step / cfg.shrink, 1e12);
    }
    r.iterations = cfg.max_iter;
    return r;
}

std::optional<Vector> minimize_quadratic(const QuadraticForm& q, const Domain& domain) {
    const auto d = q.g.size();
    if (!q.H.allFinite() || !q.g.allFinite()) return std::nullopt;
    const Matrix H = 0.5 * (q.H + q.H.transpose());

    if (domain.nonnegative()) {
        if (d != 1) return std::nullopt;
        const double h = H(0, 0);
        const double g = q.g[0];
        const double hi = domain.radius();
        std::vector<double> cand{0.0};
        if (std::isfinite(hi)) cand.push_back(hi);
        if (h > 0.0) cand.push_back(std::clamp(-g / h, 0.0, hi));
        else if (!std::isfinite(hi) && g < 0.0) return std::nullopt;
        double best = cand[0];
        for (double c : cand)
            if (0.5 * h * c * c + g * c < 0.5 * h * best * best + g * best) best = c;
        return Vector::Constant(1, best);
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const Vector& lam = es.eigenvalues();
    const Matrix& V = es.eigenvectors();
    const Vector gt = V.transpose() * q.g;
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    const double tiny = 1e-13 * scale;
    const double R = domain.radius();
    const double lmin = lam[0];

    auto solve_shift = [&](double nu) {
        Vector y(d);
        for (Eigen::Index i = 0; i < d; ++i) y[i] = -gt[i] / (lam[i] + nu);
        return y;
    };

    if (lmin > tiny) {
        const Vector y = solve_shift(0.0);
        if (!domain.bounded() || y.norm() <= R) return V * y;
    } else if (!domain.bounded()) {
        return std::nullopt;
    }

    // Boundary solution: find nu >= max(0, -lmin) with ||(L + nu)^{-1} gt|| = R.
    const double nu_lo = std::max(0.0, -lmin);
    double hard_norm2 = 0.0;
    bool degenerate = true;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (lam[i] - lmin <= tiny) {
            if (std::abs(gt[i]) > 1e-12 * std::max(1.0, gt.norm())) degenerate = false;
        } else {
            const double y = gt[i] / (lam[i] + nu_lo);
            hard_norm2 += y * y;
        }
    }
    if (degenerate && hard_norm2 <= R * R) {
        // Hard case: fill the remaining radius along the lowest eigenvector.
        Vector y = Vector::Zero(d);
        for (Eigen::Index i = 0; i < d; ++i)
            if (lam[i] - lmin > tiny) y[i] = -gt[i] / (lam[i] + nu_lo);
        if (lmin < -tiny || nu_lo > 0.0) y[0] = std::sqrt(std::max(0.0, R * R - hard_norm2));
        return V * y;
    }
    double lo = nu_lo;
    double hi = nu_lo + gt.norm() / R + 1.0;
    while (solve_shift(hi).norm() > R) hi *= 2.0;
    for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const Vector y = solve_shift(mid);
        if (!y.allFinite() || y.norm() > R) lo = mid;
        else hi = mid;
    }
    Vector y = solve_shift(hi);
    const double n = y.norm();
    if (n > R) y *= R / n;
    return V * y;
}

// ---------------------------------------------------------------------------

EmpiricalObjective EmpiricalObjective::fixed(Matrix samples) {
    EmpiricalObjective o;
    o.B = std::move(samples);
    return o;
}

Matrix EmpiricalObjective::paths(const Vector& theta) const {
    if (M.size() == 0 && U.size() == 0) return B;
    Matrix Z = B;
    if (M.size()) Z.colwise() += M * theta;
    if (U.size()) Z.array() += U.array().colwise() * (A * theta).array();
    return Z;
}

double EmpiricalObjective::evaluate(const Loss& loss, const Vector& theta, Vector* grad) const {
    const Matrix Z = paths(theta);
    const auto n = static_cast<double>(Z.cols());
    if (!grad) return loss.values(Z, theta).sum() / n;

    double total = 0.0;
    Vector gsum = Vector::Zero(theta.size());
    Vector gz_sum = Vector::Zero(Z.rows());
    Vector gzu_sum = Vector::Zero(Z.rows());
    const bool moves = M.size() || U.size();
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        const auto z = Z.col(j);
        total += loss.value(z, theta);
        gsum += loss.grad_theta(z, theta);
        if (moves) {
            const Vector gz = loss.grad_z(z, theta);
            gz_sum += gz;
            if (U.size()) gzu_sum += U.col(j).cwiseProduct(gz);
        }
    }
    // Chain rule through z_j(theta): J_j^T g = M^T g + A^T (U_j .* g).
    if (M.size()) gsum += M.transpose() * gz_sum;
    if (U.size()) gsum += A.transpose() * gzu_sum;
    *grad = gsum / n;
    return total / n;
}

std::optional<QuadraticForm> EmpiricalObjective::quadratic(const Loss& loss) const {
    const std::size_t d = loss.param_dim();
    const auto m = B.rows();
    QuadraticForm q(d);
    const Matrix Mfull = M.size() ? M : Matrix::Zero(m, idx(d));
    if (U.size() == 0) {
        if (!loss.add_quadratic(B, Mfull, q)) return std::nullopt;
    } else {
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            const Matrix Mj = Mfull + U.col(j).asDiagonal() * A;
            if (!loss.add_quadratic(B.col(j), Mj, q)) return std::nullopt;
        }
    }
    const double inv = 1.0 / static_cast<double>(B.cols());
    q.H *= inv;
    q.g *= inv;
    q.c *= inv;
    return q;
}

MinimizeResult minimize(const EmpiricalObjective& obj, const Loss& loss, const Domain& domain, const Vector& theta0,
                        const PgdConfig& cfg) {
    if (obj.size() == 0) throw ConfigError("minimize: empty objective");
    MinimizeResult r;
    if (auto q = obj.quadratic(loss)) {
        if (auto t = minimize_quadratic(*q, domain)) {
            r.theta = domain.project(*t);
            r.method = "exact_quadratic";
            return r;
        }
    }
    const PgdResult p = projected_gd(
        [&](const Vector& th, Vector* g) { return obj.evaluate(loss, th, g); }, domain, theta0, cfg);
    r.theta = p.theta;
    r.method = "projected_gd";
    r.converged = p.converged;
    r.iterations = p.iterations;
    return r;
}

// ---------------------------------------------------------------------------

LocationFit estimate_location(const Matrix& thetas, const Matrix& z, const std::vector<std::size_t>& static_rows) {
    const auto d = thetas.rows();
    const auto n = thetas.cols();
    if (z.cols() != n) throw ConfigError("estimate_location: design and observation counts differ");
    if (n <= d) throw ConfigError("estimate_location: need more observations than parameters");
    for (auto r : static_rows)
        if (idx(r) >= z.rows()) throw ConfigError("estimate_location: static row out of range");

    Matrix X(n, d + 1);
    X.col(0).setOnes();
    X.rightCols(d) = thetas.transpose();
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
    const Matrix W = cod.solve(z.transpose());

    LocationFit fit;
    fit.rank_deficient = cod.rank() < d + 1;
    fit.intercept = W.row(0).transpose();
    fit.mu_hat = W.bottomRows(d).transpose();
    for (auto r : static_rows) {
        fit.mu_hat.row(idx(r)).setZero();
        fit.intercept[idx(r)] = z.row(idx(r)).mean();
    }
    fit.residuals = (z - fit.mu_hat * thetas).colwise() - fit.intercept;
    fit.residual_norm = fit.residuals.norm();
    return fit;
}

namespace {

Matrix stage1_design(std::size_t d, std::size_t n, const Domain& domain, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "design"));
    Matrix thetas(idx(d), idx(n));
    for (Eigen::Index i = 0; i < thetas.cols(); ++i) {
        Vector t = standard_normal(rng, d);
        if (domain.nonnegative()) t = t.cwiseAbs();
        thetas.col(i) = domain.project(t);
    }
    return thetas;
}

Matrix observe_each(const DistributionMap& map, const Matrix& thetas, std::uint64_t seed) {
    Matrix z(idx(map.data_dim()), thetas.cols());
    for (Eigen::Index i = 0; i < thetas.cols(); ++i)
        z.col(i) = map.sample(thetas.col(i), 1, derive_seed(seed, "observe", static_cast<std::uint64_t>(i))).values.col(0);
    return z;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

RunRecord two_stage(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                    std::uint64_t seed, const TwoStageConfig& cfg, TwoStageEstimate* estimate) {
    check_pair(map, loss);
    const std::size_t d = map.param_dim();
    const bool scale_model = cfg.model == "location_scale";
    if (!scale_model && cfg.model != "location") throw ConfigError("two_stage: unknown model '" + cfg.model + "'");

    const std::size_t n1 = scale_model ? total_samples : total_samples / 2;
    const std::size_t n2 = total_samples - n1;
    if (n1 <= d + 1 || (!scale_model && n2 == 0))
        throw ConfigError("two_stage: budget " + std::to_string(total_samples) + " too small for dimension " +
                          std::to_string(d));

    RunRecord rec;
    rec.algorithm = "two_stage";
    rec.seed = seed;
    rec.hyperparameters = {{"model", cfg.model},
                           {"stage1_samples", std::to_string(n1)},
                           {"stage2_samples", std::to_string(n2)}};

    const Matrix thetas = stage1_design(d, n1, domain, derive_seed(seed, "stage1"));
    const Matrix z1 = observe_each(map, thetas, derive_seed(seed, "stage1"));
    const LocationFit fit = estimate_location(thetas, z1, cfg.static_rows);
    if (fit.rank_deficient) rec.flags.push_back("rank_deficient");

    EmpiricalObjective obj;
    obj.M = fit.mu_hat;
    TwoStageEstimate est;
    est.mu_hat = fit.mu_hat;
    est.intercept = fit.intercept;
    est.ols_residual_norm = fit.residual_norm;
    est.rank_deficient = fit.rank_deficient;

    if (!scale_model) {
        // Base samples observed at theta = 0 already carry the intercept.
        obj.B = map.sample(Vector::Zero(idx(d)), n2, derive_seed(seed, "stage2")).values;
        est.base_samples = obj.B.colwise() - fit.intercept;
    } else {
        const auto m = z1.rows();
        const auto nn = idx(n1);
        // Squared residuals regressed on [1, theta, theta_k theta_l (k <= l)].
        const auto p = 1 + idx(d) + idx(d) * (idx(d) + 1) / 2;
        Matrix F(nn, p);
        for (Eigen::Index i = 0; i < nn; ++i) {
            F(i, 0) = 1.0;
            F.row(i).segment(1, idx(d)) = thetas.col(i).transpose();
            Eigen::Index c = 1 + idx(d);
            for (Eigen::Index k = 0; k < idx(d); ++k)
                for (Eigen::Index l = k; l < idx(d); ++l) F(i, c++) = thetas(k, i) * thetas(l, i);
        }
        const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(F);
        const Matrix coef = cod.solve(fit.residuals.array().square().matrix().transpose());  // p x m

        est.scale_coef = Matrix::Zero(m, idx(d) + 1);
        for (Eigen::Index j = 0; j < m; ++j) {
            Matrix P(idx(d) + 1, idx(d) + 1);
            P(0, 0) = coef(0, j);
            for (Eigen::Index k = 0; k < idx(d); ++k) P(0, k + 1) = P(k + 1, 0) = 0.5 * coef(1 + k, j);
            Eigen::Index c = 1 + idx(d);
            for (Eigen::Index k = 0; k < idx(d); ++k)
                for (Eigen::Index l = k; l < idx(d); ++l) {
                    const double v = coef(c++, j);
                    if (k == l) P(k + 1, k + 1) = v;
                    else P(k + 1, l + 1) = P(l + 1, k + 1) = 0.5 * v;
                }
            Eigen::SelfAdjointEigenSolver<Matrix> es(P);
            const double top = es.eigenvalues()[idx(d)];
            if (top <= 0.0) continue;
            Vector a = std::sqrt(top) * es.eigenvectors().col(idx(d));
            Eigen::Index arg = 0;
            a.cwiseAbs().maxCoeff(&arg);
            if (a[arg] < 0.0) a = -a;
            est.scale_coef.row(j) = a.transpose();
        }

        Matrix lifted(idx(d) + 1, nn);
        lifted.row(0).setOnes();
        lifted.bottomRows(idx(d)) = thetas;
        const Matrix scales = est.scale_coef * lifted;  // m x n
        std::vector<bool> keep(n1, true);
        for (Eigen::Index j = 0; j < m; ++j) {
            if (est.scale_coef.row(j).isZero(0.0)) continue;
            std::vector<double> mags(n1);
            for (Eigen::Index i = 0; i < nn; ++i) mags[static_cast<std::size_t>(i)] = std::abs(scales(j, i));
            const double cut = 0.1 * median_of(mags);
            for (Eigen::Index i = 0; i < nn; ++i)
                if (std::abs(scales(j, i)) < cut || scales(j, i) == 0.0) keep[static_cast<std::size_t>(i)] = false;
        }
        std::vector<Eigen::Index> kept;
        for (std::size_t i = 0; i < n1; ++i)
            if (keep[i]) kept.push_back(idx(i));
        if (kept.empty()) throw NumericalError("two_stage: every residual fell below the scale cutoff");

        Matrix U(m, idx(kept.size()));
        for (Eigen::Index c = 0; c < U.cols(); ++c) {
            const Eigen::Index i = kept[static_cast<std::size_t>(c)];
            for (Eigen::Index j = 0; j < m; ++j)
                U(j, c) = est.scale_coef.row(j).isZero(0.0) ? 0.0 : fit.residuals(j, i) / scales(j, i);
        }
        obj.U = U;
        obj.A = est.scale_coef.rightCols(idx(d));
        obj.B = (U.array().colwise() * est.scale_coef.col(0).array()).matrix().colwise() + fit.intercept;
        est.base_samples = U;
        rec.hyperparameters.emplace_back("residuals_kept", std::to_string(kept.size()));
    }

    const MinimizeResult sol = minimize(obj, loss, domain, Vector::Zero(idx(d)), cfg.solver);
    if (!sol.converged) rec.flags.push_back("max_iter");
    rec.hyperparameters.emplace_back("solver", sol.method);
    rec.final_theta = sol.theta;
    rec.samples_used = n1 + n2;
    rec.trace.push_back({rec.samples_used, sol.theta, std::nullopt});
    if (estimate) *estimate = std::move(est);
    return rec;
}

// ---------------------------------------------------------------------------

double StepSchedule::at(std::size_t t) const {
    const double tt = static_cast<double>(t) + k0;
    switch (kind) {
        case Kind::inv_sqrt: return c / std::sqrt(tt);
        case Kind::inv: return c / tt;
        case Kind::constant: return c;
    }
    return c;
}

std::string StepSchedule::describe() const {
    const std::string cs = format_double(c);
    const std::string ks = format_double(k0);
    switch (kind) {
        case Kind::inv_sqrt: return cs + "/sqrt(" + ks + "+t)";
        case Kind::inv: return cs + "/(" + ks + "+t)";
        case Kind::constant: return cs;
    }
    return cs;
}

StepSchedule StepSchedule::parse(std::string_view kind, double c, double k0) {
    StepSchedule s;
    if (kind == "inv_sqrt") s.kind = Kind::inv_sqrt;
    else if (kind == "inv") s.kind = Kind::inv;
    else if (kind == "constant") s.kind = Kind::constant;
    else throw ConfigError("unknown step schedule '" + std::string(kind) + "'");
    if (!(c > 0.0) || !(k0 >= 0.0)) throw ConfigError("step schedule needs c > 0 and k0 >= 0");
    s.c = c;
    s.k0 = k0;
    return s;
}

Vector dfo_gradient_estimate(const DistributionMap& map, const Loss& loss, const Vector& theta, double delta,
                             std::size_t batch, std::uint64_t seed, Vector* direction) {
    if (!(delta > 0.0)) throw ConfigError("dfo: delta must be positive");
    if (batch == 0) throw ConfigError("dfo: batch must be positive");
    const std::size_t d = map.param_dim();
    Rng rng(derive_seed(seed, "direction"));
    const Vector u = unit_sphere(rng, d);
    const Vector probe = theta + delta * u;
    const double pr = loss.values(map.sample(probe, batch, derive_seed(seed, "batch")).values, probe).mean();
    if (direction) *direction = u;
    return (static_cast<double>(d) / delta) * pr * u;
}

RunRecord dfo(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
              std::uint64_t seed, const DfoConfig& cfg, const std::vector<std::size_t>& checkpoints) {
    check_pair(map, loss);
    if (!(cfg.delta > 0.0)) throw ConfigError("dfo: delta must be positive");
    if (cfg.batch == 0) throw ConfigError("dfo: batch must be positive");
    if (domain.bounded() && cfg.delta >= domain.radius())
        throw ConfigError("dfo: delta " + format_double(cfg.delta) + " must be smaller than the domain radius " +
                          format_double(domain.radius()));
    const Domain inner = domain.bounded() ? domain.shrunk(cfg.delta) : domain;

    RunRecord rec;
    rec.algorithm = "dfo";
    rec.seed = seed;
    rec.hyperparameters = {{"delta", format_double(cfg.delta)},
                           {"batch", std::to_string(cfg.batch)},
                           {"step", cfg.step.describe()}};
    TraceRecorder tr(checkpoints);
    Vector theta = initial_point(cfg.theta0, map.param_dim(), inner);
    tr.record(0, theta);
    std::size_t used = 0;
    for (std::size_t t = 1; used + cfg.batch <= total_samples; ++t) {
        const Vector g = dfo_gradient_estimate(map, loss, theta, cfg.delta, cfg.batch, derive_seed(seed, "dfo", t));
        theta = inner.project(theta - cfg.step.at(t) * g);
        used += cfg.batch;
        tr.record(used, theta);
    }
    rec.trace = tr.finish();
    rec.final_theta = theta;
    rec.samples_used = used;
    return rec;
}

RunRecord greedy_sgd(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                     std::uint64_t seed, const GreedySgdConfig& cfg, const std::vector<std::size_t>& checkpoints) {
    check_pair(map, loss);
    RunRecord rec;
    rec.algorithm = "greedy_sgd";
    rec.seed = seed;
    rec.hyperparameters = {{"step", cfg.step.describe()}};
    TraceRecorder tr(checkpoints);
    Vector theta = initial_point(cfg.theta0, map.param_dim(), domain);
    tr.record(0, theta);
    for (std::size_t t = 1; t <= total_samples; ++t) {
        const Matrix z = map.sample(theta, 1, derive_seed(seed, "greedy", t)).values;
        theta = domain.project(theta - cfg.step.at(t) * loss.grad_theta(z.col(0), theta));
        tr.record(t, theta);
    }
    rec.trace = tr.finish();
    rec.final_theta = theta;
    rec.samples_used = total_samples;
    return rec;
}

RunRecord lazy_sgd(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                   std::uint64_t seed, const LazySgdConfig& cfg, const std::vector<std::size_t>& checkpoints) {
    check_pair(map, loss);
    if (!(cfg.c > 0.0) || !(cfg.k0 >= 0.0)) throw ConfigError("lazy_sgd: need c > 0 and k0 >= 0");
    RunRecord rec;
    rec.algorithm = "lazy_sgd";
    rec.seed = seed;
    rec.hyperparameters = {{"c", format_double(cfg.c)}, {"k0", format_double(cfg.k0)}, {"pass", "one_random_order"}};
    TraceRecorder tr(checkpoints);
    Vector theta = initial_point(cfg.theta0, map.param_dim(), domain);
    tr.record(0, theta);
    std::size_t used = 0;
    std::size_t t = 0;
    for (std::size_t k = 1; used < total_samples; ++k) {
        const std::size_t batch = std::min(k * k, total_samples - used);
        const Matrix z = map.sample(theta, batch, derive_seed(seed, "lazy", k)).values;
        std::vector<Eigen::Index> order(batch);
        for (std::size_t i = 0; i < batch; ++i) order[i] = idx(i);
        Rng rng(derive_seed(seed, "lazy-order", k));
        for (std::size_t i = batch; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (Eigen::Index j : order) {
            ++t;
            theta = domain.project(theta - cfg.c / (cfg.k0 + static_cast<double>(t)) * loss.grad_theta(z.col(j), theta));
        }
        used += batch;
        tr.record(used, theta);
    }
    rec.trace = tr.finish();
    rec.final_theta = theta;
    rec.samples_used = used;
    return rec;
}

RunRecord rrm(const DistributionMap& map, const Loss& loss, const Domain& domain, std::uint64_t seed,
              const RrmConfig& cfg, const std::vector<std::size_t>& checkpoints) {
    check_pair(map, loss);
    if (cfg.n_per_iter == 0) throw ConfigError("rrm: n_per_iter must be positive");
    RunRecord rec;
    rec.algorithm = "rrm";
    rec.seed = seed;
    rec.hyperparameters = {{"iterations", std::to_string(cfg.iterations)},
                           {"n_per_iter", std::to_string(cfg.n_per_iter)}};
    TraceRecorder tr(checkpoints);
    Vector theta = initial_point(cfg.theta0, map.param_dim(), domain);
    tr.record(0, theta);
    std::size_t used = 0;
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        const Matrix z = map.sample(theta, cfg.n_per_iter, derive_seed(seed, "rrm", t)).values;
        const MinimizeResult sol = minimize(EmpiricalObjective::fixed(z), loss, domain, theta, cfg.solver);
        if (!sol.converged && !rec.flagged("max_iter")) rec.flags.push_back("max_iter");
        theta = sol.theta;
        used += cfg.n_per_iter;
        tr.record(used, theta);
    }
    rec.trace = tr.finish();
    rec.final_theta = theta;
    rec.samples_used = used;
    return rec;
}

}  // namespace perfopt

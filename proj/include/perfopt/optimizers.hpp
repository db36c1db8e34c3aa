#pragma once

#include "perfopt/distribution_maps.hpp"
#include "perfopt/losses.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace perfopt {

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct TracePoint {
    std::size_t samples = 0;  // cumulative draws from the distribution map
    Vector theta;
    std::optional<double> pr_estimate;
};

struct RunRecord {
    std::string algorithm;
    std::vector<std::pair<std::string, std::string>> hyperparameters;
    std::uint64_t seed = 0;
    std::vector<TracePoint> trace;
    Vector final_theta;
    std::size_t samples_used = 0;
    std::vector<std::string> flags;

    bool flagged(std::string_view f) const;
    /// Latest trace point with samples <= budget, if any.
    const TracePoint* at(std::size_t budget) const;
};

/// Thins a trace to the last state before each checkpoint. With no
/// checkpoints every recorded state is kept.
class TraceRecorder {
public:
    explicit TraceRecorder(std::vector<std::size_t> checkpoints = {});

    void record(std::size_t samples, const Vector& theta);
    std::vector<TracePoint> finish();

private:
    std::vector<std::size_t> checkpoints_;
    std::size_t next_ = 0;
    std::vector<TracePoint> trace_;
    std::optional<TracePoint> pending_;
};

// ---------------------------------------------------------------------------
// Deterministic inner solvers
// ---------------------------------------------------------------------------

struct PgdConfig {
    double armijo = 1e-4;
    double shrink = 0.5;
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    double initial_step = 1.0;
};

struct PgdResult {
    Vector theta;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Objective returning f(theta) and, when grad is non-null, its gradient.
using Objective = std::function<double(const Vector& theta, Vector* grad)>;

/// Projected gradient descent with Armijo backtracking. Stops when one step
/// improves f by less than tol; on max_iter returns the best iterate with
/// converged = false.
PgdResult projected_gd(const Objective& f, const Domain& domain, const Vector& theta0, const PgdConfig& cfg = {});

/// Exact minimizer of a quadratic form over the domain. Returns nothing when
/// the problem has no unique solution or the domain shape is not handled.
std::optional<Vector> minimize_quadratic(const QuadraticForm& q, const Domain& domain);

/// Empirical risk over sample paths z_j(theta) = B_j + M theta + U_j .* (A theta).
/// U and A are empty for pure location paths.
struct EmpiricalObjective {
    Matrix B;
    Matrix M;
    Matrix U;
    Matrix A;

    /// Paths that do not move with theta.
    static EmpiricalObjective fixed(Matrix samples);

    std::size_t size() const noexcept { return static_cast<std::size_t>(B.cols()); }
    Matrix paths(const Vector& theta) const;
    double evaluate(const Loss& loss, const Vector& theta, Vector* grad) const;
    /// Mean loss as a quadratic form, when the loss admits one.
    std::optional<QuadraticForm> quadratic(const Loss& loss) const;
};

struct MinimizeResult {
    Vector theta;
    std::string method;  // "exact_quadratic" or "projected_gd"
    bool converged = true;
    std::size_t iterations = 0;
};

MinimizeResult minimize(const EmpiricalObjective& obj, const Loss& loss, const Domain& domain, const Vector& theta0,
                        const PgdConfig& cfg = {});

// ---------------------------------------------------------------------------
// Two-stage plug-in estimation
// ---------------------------------------------------------------------------

struct LocationFit {
    Matrix mu_hat;     // m x d
    Vector intercept;  // m
    Matrix residuals;  // m x n
    double residual_norm = 0.0;
    bool rank_deficient = false;
};

/// OLS of z on [1, theta]. Rows listed in static_rows are fitted with an
/// intercept only, so their slope is pinned to zero.
LocationFit estimate_location(const Matrix& thetas, const Matrix& z, const std::vector<std::size_t>& static_rows = {});

struct TwoStageConfig {
    /// "location": z = z0 + mu0 + mu theta. "location_scale": additionally
    /// fits a per-coordinate scale a_j0 + a_j^T theta.
    std::string model = "location";
    std::vector<std::size_t> static_rows;
    PgdConfig solver;
};

struct TwoStageEstimate {
    Matrix mu_hat;
    Vector intercept;
    Matrix base_samples;  // m x n, centred base draws (location) or standardized residuals (location_scale)
    Matrix scale_coef;    // m x (d+1), location_scale only
    double ols_residual_norm = 0.0;
    bool rank_deficient = false;
};

/// Budget split: half deploys standard Gaussian parameters to fit the map,
/// half deploys theta = 0 to collect base samples. The location_scale model
/// spends the whole budget on the first stage and reuses its residuals.
RunRecord two_stage(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                    std::uint64_t seed, const TwoStageConfig& cfg = {}, TwoStageEstimate* estimate = nullptr);

// ---------------------------------------------------------------------------
// Online methods
// ---------------------------------------------------------------------------

struct StepSchedule {
    enum class Kind { inv_sqrt, inv, constant };
    Kind kind = Kind::inv_sqrt;
    double c = 1.0;
    double k0 = 0.0;

    /// inv_sqrt: c / sqrt(k0 + t); inv: c / (k0 + t); constant: c.
    double at(std::size_t t) const;
    std::string describe() const;
    static StepSchedule parse(std::string_view kind, double c, double k0);
};

struct DfoConfig {
    double delta = 1.0;
    std::size_t batch = 20;
    StepSchedule step{StepSchedule::Kind::inv, 0.01, 0.0};
    std::optional<Vector> theta0;
};

/// (d / delta) * PR_hat(theta + delta u) * u with u uniform on the sphere.
Vector dfo_gradient_estimate(const DistributionMap& map, const Loss& loss, const Vector& theta, double delta,
                             std::size_t batch, std::uint64_t seed, Vector* direction = nullptr);

RunRecord dfo(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
              std::uint64_t seed, const DfoConfig& cfg = {}, const std::vector<std::size_t>& checkpoints = {});

struct GreedySgdConfig {
    StepSchedule step{StepSchedule::Kind::inv_sqrt, 1.0, 0.0};
    std::optional<Vector> theta0;
};

RunRecord greedy_sgd(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                     std::uint64_t seed, const GreedySgdConfig& cfg = {},
                     const std::vector<std::size_t>& checkpoints = {});

struct LazySgdConfig {
    double c = 1.0;
    double k0 = 1.0;
    std::optional<Vector> theta0;
};

/// Deployment k draws k^2 samples (the last one is cut to the budget) and
/// makes one pass over them in random order with step c / (k0 + t), where t
/// counts SGD steps across all deployments.
RunRecord lazy_sgd(const DistributionMap& map, const Loss& loss, const Domain& domain, std::size_t total_samples,
                   std::uint64_t seed, const LazySgdConfig& cfg = {}, const std::vector<std::size_t>& checkpoints = {});

struct RrmConfig {
    std::size_t iterations = 10;
    std::size_t n_per_iter = 1000;
    std::optional<Vector> theta0;
    PgdConfig solver;
};

RunRecord rrm(const DistributionMap& map, const Loss& loss, const Domain& domain, std::uint64_t seed,
              const RrmConfig& cfg = {}, const std::vector<std::size_t>& checkpoints = {});

}  // namespace perfopt

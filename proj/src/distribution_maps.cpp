#include "perfopt/distribution_maps.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace perfopt {

namespace {

Matrix psd_factor(const Matrix& cov, std::string_view what) {
    if (cov.rows() != cov.cols()) throw ConfigError(std::string(what) + ": covariance must be square");
    if (!cov.allFinite()) throw DomainError(std::string(what) + ": non-finite covariance");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
        throw DomainError(std::string(what) + ": covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const Vector& ev = es.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -tol) {
        throw DomainError(std::string(what) + ": covariance is not positive semidefinite (min eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
    }
    return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

// ---------------------------------------------------------------------------

BaseDistribution BaseDistribution::gaussian(Vector mean, Matrix covariance) {
    require_finite(mean, "gaussian base mean");
    if (covariance.rows() != mean.size()) throw ConfigError("gaussian base: mean/covariance dimension mismatch");
    BaseDistribution b;
    b.kind_ = "gaussian";
    b.factor_ = psd_factor(covariance, "gaussian base");
    b.mean_ = std::move(mean);
    b.covariance_ = std::move(covariance);
    return b;
}

BaseDistribution BaseDistribution::empirical(Matrix points) {
    if (points.cols() == 0 || points.rows() == 0) throw ConfigError("empirical base: empty support");
    if (!points.allFinite()) throw DomainError("empirical base: non-finite point");
    BaseDistribution b;
    b.kind_ = "empirical";
    b.mean_ = points.rowwise().mean();
    const Matrix centred = points.colwise() - b.mean_;
    b.covariance_ = centred * centred.transpose() / static_cast<double>(points.cols());
    b.points_ = std::move(points);
    return b;
}

BaseDistribution BaseDistribution::degenerate(Vector point) {
    require_finite(point, "degenerate base");
    BaseDistribution b;
    b.kind_ = "degenerate";
    b.covariance_ = Matrix::Zero(point.size(), point.size());
    b.mean_ = std::move(point);
    return b;
}

BaseDistribution BaseDistribution::custom(std::string name, Sampler sampler, Vector mean, Matrix covariance) {
    if (!sampler) throw ConfigError("custom base: empty sampler");
    if (covariance.rows() != mean.size()) throw ConfigError("custom base: mean/covariance dimension mismatch");
    psd_factor(covariance, "custom base");
    BaseDistribution b;
    b.kind_ = std::move(name);
    b.sampler_ = std::move(sampler);
    b.mean_ = std::move(mean);
    b.covariance_ = std::move(covariance);
    return b;
}

Matrix BaseDistribution::draw(std::size_t n, Rng& rng) const {
    const auto m = static_cast<Eigen::Index>(dim());
    const auto cols = static_cast<Eigen::Index>(n);
    if (kind_ == "gaussian") {
        Matrix g(m, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < m; ++i) g(i, j) = rng.normal();
        return (factor_ * g).colwise() + mean_;
    }
    if (kind_ == "degenerate") return mean_.replicate(1, cols);
    if (kind_ == "empirical") {
        Matrix out(m, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            out.col(j) = points_.col(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(points_.cols()))));
        return out;
    }
    Matrix out = sampler_(n, rng);
    if (out.rows() != m || out.cols() != cols) throw ConfigError("custom base sampler returned wrong shape");
    return out;
}

// ---------------------------------------------------------------------------

SampleSet DistributionMap::sample(const Vector& theta, std::size_t n, std::uint64_t seed) const {
    require_dim(theta, param_dim(), "sample: theta");
    require_finite(theta, "sample: theta");
    if (n == 0) throw ConfigError("sample: n must be at least 1");
    return SampleSet{draw(theta, n, seed), split()};
}

// ---------------------------------------------------------------------------

LocationScaleMap::LocationScaleMap(Matrix location, std::vector<Matrix> scale_slices, Matrix base_scale,
                                   Vector offset, BaseDistribution base, std::optional<std::size_t> split)
    : location_(std::move(location)),
      slices_(std::move(scale_slices)),
      base_scale_(std::move(base_scale)),
      offset_(std::move(offset)),
      base_(std::move(base)),
      split_(split) {
    const auto m = location_.rows();
    const auto d = location_.cols();
    if (m == 0 || d == 0) throw ConfigError("location-scale map: empty location matrix");
    if (offset_.size() != m) throw ConfigError("location-scale map: offset dimension mismatch");
    if (base_scale_.rows() != m || base_scale_.cols() != m)
        throw ConfigError("location-scale map: base scale must be m x m");
    if (static_cast<Eigen::Index>(base_.dim()) != m) throw ConfigError("location-scale map: base dimension mismatch");
    if (!slices_.empty() && static_cast<Eigen::Index>(slices_.size()) != d)
        throw ConfigError("location-scale map: need one scale slice per parameter");
    for (const auto& s : slices_) {
        if (s.rows() != m || s.cols() != m) throw ConfigError("location-scale map: scale slices must be m x m");
        if (s.cwiseAbs().maxCoeff() > 0.0) has_scale_ = true;
    }
    if (split_ && *split_ > static_cast<std::size_t>(m)) throw ConfigError("location-scale map: split out of range");
    if (!location_.allFinite() || !base_scale_.allFinite() || !offset_.allFinite())
        throw DomainError("location-scale map: non-finite parameters");
    // Sigma(theta) multiplies z0, so a non-centred base would leak a
    // theta-dependent shift that the location part does not account for.
    if (has_scale_ && base_.mean().cwiseAbs().maxCoeff() > 1e-9)
        throw ConfigError("location-scale map: base must be zero-mean when scale slices are present");
}

std::shared_ptr<LocationScaleMap> LocationScaleMap::location(Matrix mu, BaseDistribution base, Vector offset,
                                                             std::optional<std::size_t> split) {
    const auto m = mu.rows();
    return std::make_shared<LocationScaleMap>(std::move(mu), std::vector<Matrix>{}, Matrix::Identity(m, m),
                                              std::move(offset), std::move(base), split);
}

Matrix LocationScaleMap::scale(const Vector& theta) const {
    require_dim(theta, param_dim(), "scale: theta");
    Matrix s = base_scale_;
    for (std::size_t k = 0; k < slices_.size(); ++k) s += theta[static_cast<Eigen::Index>(k)] * slices_[k];
    return s;
}

Vector LocationScaleMap::mean(const Vector& theta) const {
    require_dim(theta, param_dim(), "mean: theta");
    return scale(theta) * base_.mean() + offset_ + location_ * theta;
}

Matrix LocationScaleMap::base_draws(std::size_t n, std::uint64_t seed) const {
    Rng rng(derive_seed(seed, "base"));
    return base_.draw(n, rng);
}

Matrix LocationScaleMap::transform(const Vector& theta, const Matrix& z0) const {
    const Vector shift = offset_ + location_ * theta;
    if (!has_scale_ && base_scale_.isIdentity(0.0)) return z0.colwise() + shift;
    return (scale(theta) * z0).colwise() + shift;
}

Matrix LocationScaleMap::draw(const Vector& theta, std::size_t n, std::uint64_t seed) const {
    return transform(theta, base_draws(n, seed));
}

std::shared_ptr<LocationScaleMap> gaussian_scale_map(double mu, double eps) {
    if (!(eps > 0.0)) throw ConfigError("gaussian scale map: eps must be positive");
    return std::make_shared<LocationScaleMap>(Matrix::Zero(1, 1), std::vector<Matrix>{Matrix::Constant(1, 1, eps)},
                                              Matrix::Zero(1, 1), Vector::Constant(1, mu),
                                              BaseDistribution::gaussian(Vector::Zero(1), Matrix::Identity(1, 1)));
}

std::shared_ptr<LocationScaleMap> point_mass_map(std::size_t d, double eps) {
    const auto n = static_cast<Eigen::Index>(d);
    return LocationScaleMap::location(eps * Matrix::Identity(n, n), BaseDistribution::degenerate(Vector::Zero(n)),
                                      Vector::Zero(n));
}

// ---------------------------------------------------------------------------

BernoulliLinearMap::BernoulliLinearMap(double intercept, Vector weights, const Domain& domain)
    : intercept_(intercept), weights_(std::move(weights)) {
    if (weights_.size() == 0) throw ConfigError("bernoulli map: empty weight vector");
    require_finite(weights_, "bernoulli map weights");
    double lo = intercept_;
    double hi = intercept_;
    if (weights_.norm() > 0.0) {
        if (!domain.bounded()) throw DomainError("bernoulli map: probability unbounded on an unbounded domain");
        const double r = domain.radius();
        if (domain.nonnegative()) {
            hi += r * weights_.cwiseMax(0.0).norm();
            lo -= r * (-weights_).cwiseMax(0.0).norm();
        } else {
            hi += r * weights_.norm();
            lo -= r * weights_.norm();
        }
    }
    if (lo < 0.0 || hi > 1.0) {
        throw DomainError("bernoulli map: probability range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] leaves [0, 1] on the domain");
    }
}

double BernoulliLinearMap::probability(const Vector& theta) const {
    require_dim(theta, param_dim(), "bernoulli map: theta");
    const double p = intercept_ + weights_.dot(theta);
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli map: probability " + std::to_string(p) + " outside [0, 1]");
    return p;
}

Matrix BernoulliLinearMap::draw(const Vector& theta, std::size_t n, std::uint64_t seed) const {
    const double p = probability(theta);
    Rng rng(derive_seed(seed, "bernoulli"));
    Matrix out(1, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.cols(); ++i) out(0, i) = rng.uniform() < p ? 1.0 : 0.0;
    return out;
}

Matrix CountingMap::draw(const Vector& theta, std::size_t n, std::uint64_t seed) const {
    count_.fetch_add(n, std::memory_order_relaxed);
    return inner_->sample(theta, n, seed).values;
}

// ---------------------------------------------------------------------------

SpectralSummary spectral_summary(const LocationScaleMap& map) {
    SpectralSummary s;
    const Matrix& mu = map.location();
    Eigen::JacobiSVD<Matrix> svd(mu);
    const Vector& sv = svd.singularValues();
    s.sigma_max_location = sv.size() ? sv.maxCoeff() : 0.0;
    // theta -> mu theta has a nontrivial kernel when d > m.
    s.sigma_min_location = (mu.cols() > mu.rows() || sv.size() == 0) ? 0.0 : sv.minCoeff();

    const Matrix& cov = map.base().covariance();
    psd_factor(cov, "base covariance");
    s.covariance_estimated = map.base().covariance_estimated();
    if (!map.has_scale()) return s;

    // ||C^{1/2} Sigma(theta)^T||_F^2 = theta^T G theta, G_kl = tr(S_k C S_l^T).
    const auto& slices = map.scale_slices();
    const auto d = static_cast<Eigen::Index>(slices.size());
    Matrix g(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Matrix sc = slices[static_cast<std::size_t>(k)] * cov;
        for (Eigen::Index l = k; l < d; ++l) {
            g(k, l) = g(l, k) = (sc.cwiseProduct(slices[static_cast<std::size_t>(l)])).sum();
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    s.sigma_max_scale = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    s.sigma_min_scale = std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
    return s;
}

double sensitivity_bound(const LocationScaleMap& map) {
    const auto s = spectral_summary(map);
    return std::hypot(s.sigma_max_location, s.sigma_max_scale);
}

double wasserstein_upper_bound(const LocationScaleMap& map, const Vector& theta, const Vector& theta_prime,
                               std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("wasserstein_upper_bound: n must be at least 1");
    require_dim(theta, map.param_dim(), "wasserstein_upper_bound: theta");
    require_dim(theta_prime, map.param_dim(), "wasserstein_upper_bound: theta'");
    const Vector delta = theta - theta_prime;
    if (delta.isZero(0.0)) return 0.0;
    const Vector shift = map.location() * delta;
    if (!map.has_scale()) return shift.norm();

    Matrix sd = Matrix::Zero(static_cast<Eigen::Index>(map.data_dim()), static_cast<Eigen::Index>(map.data_dim()));
    for (std::size_t k = 0; k < map.scale_slices().size(); ++k)
        sd += delta[static_cast<Eigen::Index>(k)] * map.scale_slices()[k];
    const Matrix z0 = map.base_draws(n, seed);
    return ((sd * z0).colwise() + shift).colwise().norm().mean();
}

}  // namespace perfopt

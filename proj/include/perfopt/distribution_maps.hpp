#pragma once

#include "perfopt/core.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace perfopt {

// ---------------------------------------------------------------------------
// Base distribution D0
// ---------------------------------------------------------------------------

class BaseDistribution {
public:
    /// Draws n points into an m x n matrix.
    using Sampler = std::function<Matrix(std::size_t n, Rng& rng)>;

    static BaseDistribution gaussian(Vector mean, Matrix covariance);
    static BaseDistribution empirical(Matrix points);
    static BaseDistribution degenerate(Vector point);
    /// User-supplied sampler with known mean and covariance.
    static BaseDistribution custom(std::string name, Sampler sampler, Vector mean, Matrix covariance);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
    const std::string& kind() const noexcept { return kind_; }
    const Vector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    /// True when the covariance is a sample estimate (empirical base).
    bool covariance_estimated() const noexcept { return kind_ == "empirical"; }

    std::optional<double> subgaussian_param;

    Matrix draw(std::size_t n, Rng& rng) const;

private:
    BaseDistribution() = default;

    std::string kind_;
    Vector mean_;
    Matrix covariance_;
    Matrix factor_;  // gaussian: covariance = factor * factor^T
    Matrix points_;  // empirical support
    Sampler sampler_;
};

// ---------------------------------------------------------------------------
// Distribution maps
// ---------------------------------------------------------------------------

class LocationScaleMap;

/// theta -> D(theta). Sampling is a pure function of (theta, n, seed). Calls
/// with the same seed at different theta share their underlying randomness,
/// which gives common random numbers across parameters for free.
class DistributionMap {
public:
    virtual ~DistributionMap() = default;

    virtual std::size_t param_dim() const = 0;
    virtual std::size_t data_dim() const = 0;
    virtual std::optional<std::size_t> split() const { return std::nullopt; }
    virtual std::string name() const = 0;

    SampleSet sample(const Vector& theta, std::size_t n, std::uint64_t seed) const;

    virtual const LocationScaleMap* as_location_scale() const noexcept { return nullptr; }

protected:
    virtual Matrix draw(const Vector& theta, std::size_t n, std::uint64_t seed) const = 0;
};

using MapPtr = std::shared_ptr<const DistributionMap>;

/// z = (Sigma0 + Sigma(theta)) z0 + mu0 + mu theta, Sigma(theta) = sum_k theta_k S_k.
class LocationScaleMap final : public DistributionMap {
public:
    LocationScaleMap(Matrix location, std::vector<Matrix> scale_slices, Matrix base_scale, Vector offset,
                     BaseDistribution base, std::optional<std::size_t> split = std::nullopt);

    /// Pure location family z = z0 + mu0 + mu theta.
    static std::shared_ptr<LocationScaleMap> location(Matrix mu, BaseDistribution base, Vector offset,
                                                      std::optional<std::size_t> split = std::nullopt);

    std::size_t param_dim() const override { return static_cast<std::size_t>(location_.cols()); }
    std::size_t data_dim() const override { return static_cast<std::size_t>(location_.rows()); }
    std::optional<std::size_t> split() const override { return split_; }
    std::string name() const override { return "location_scale"; }
    const LocationScaleMap* as_location_scale() const noexcept override { return this; }

    const Matrix& location() const noexcept { return location_; }
    const std::vector<Matrix>& scale_slices() const noexcept { return slices_; }
    const Matrix& base_scale() const noexcept { return base_scale_; }
    const Vector& offset() const noexcept { return offset_; }
    const BaseDistribution& base() const noexcept { return base_; }
    bool has_scale() const noexcept { return has_scale_; }

    Matrix scale(const Vector& theta) const;
    Vector mean(const Vector& theta) const;

    /// Base draws shared by every theta for a given seed.
    Matrix base_draws(std::size_t n, std::uint64_t seed) const;
    /// Applies the location-scale transform to pre-drawn base points.
    Matrix transform(const Vector& theta, const Matrix& z0) const;

protected:
    Matrix draw(const Vector& theta, std::size_t n, std::uint64_t seed) const override;

private:
    Matrix location_;
    std::vector<Matrix> slices_;
    Matrix base_scale_;
    Vector offset_;
    BaseDistribution base_;
    std::optional<std::size_t> split_;
    bool has_scale_ = false;
};

/// N(mu, eps^2 theta^2) written as a location-scale map with zero base scale.
std::shared_ptr<LocationScaleMap> gaussian_scale_map(double mu, double eps);
/// Point mass at eps * theta.
std::shared_ptr<LocationScaleMap> point_mass_map(std::size_t d, double eps);

/// y ~ Bernoulli(a + w^T theta), m = 1.
class BernoulliLinearMap final : public DistributionMap {
public:
    /// Validates a + w^T theta in [0, 1] over the whole domain.
    BernoulliLinearMap(double intercept, Vector weights, const Domain& domain);

    std::size_t param_dim() const override { return static_cast<std::size_t>(weights_.size()); }
    std::size_t data_dim() const override { return 1; }
    std::string name() const override { return "bernoulli_linear"; }

    double probability(const Vector& theta) const;

protected:
    Matrix draw(const Vector& theta, std::size_t n, std::uint64_t seed) const override;

private:
    double intercept_;
    Vector weights_;
};

/// Forwards to an inner map and counts every instance drawn.
class CountingMap final : public DistributionMap {
public:
    explicit CountingMap(MapPtr inner) : inner_(std::move(inner)) {}

    std::size_t param_dim() const override { return inner_->param_dim(); }
    std::size_t data_dim() const override { return inner_->data_dim(); }
    std::optional<std::size_t> split() const override { return inner_->split(); }
    std::string name() const override { return inner_->name(); }
    const LocationScaleMap* as_location_scale() const noexcept override { return inner_->as_location_scale(); }

    std::size_t count() const noexcept { return count_.load(std::memory_order_relaxed); }
    void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

protected:
    Matrix draw(const Vector& theta, std::size_t n, std::uint64_t seed) const override;

private:
    MapPtr inner_;
    mutable std::atomic<std::size_t> count_{0};
};

// ---------------------------------------------------------------------------
// Structural summaries
// ---------------------------------------------------------------------------

struct SpectralSummary {
    double sigma_max_location = 0.0;
    double sigma_min_location = 0.0;
    double sigma_max_scale = 0.0;
    double sigma_min_scale = 0.0;
    bool covariance_estimated = false;
};

/// Extremal gains of theta -> mu theta and theta -> ||C^{1/2} Sigma(theta)^T||_F
/// over the unit sphere, where C is the base covariance.
SpectralSummary spectral_summary(const LocationScaleMap& map);

/// sqrt(sigma_max(mu)^2 + sigma_max(Sigma)^2), an upper bound on the
/// Wasserstein-1 Lipschitz constant of the map.
double sensitivity_bound(const LocationScaleMap& map);

/// Monte Carlo estimate of E||Sigma(theta - theta') z0 + mu (theta - theta')||.
double wasserstein_upper_bound(const LocationScaleMap& map, const Vector& theta, const Vector& theta_prime,
                               std::size_t n, std::uint64_t seed);

}  // namespace perfopt

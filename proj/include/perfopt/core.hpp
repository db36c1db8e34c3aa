#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perfopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VecView = Eigen::Ref<const Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual std::string_view kind() const noexcept = 0;
};

/// Invalid configuration: dimension mismatches, bad counts, unknown keys.
class ConfigError final : public Error {
public:
    using Error::Error;
    std::string_view kind() const noexcept override { return "config"; }
};

/// Input outside the mathematical domain of an operation (non-PSD matrix,
/// probability outside [0,1], negative constant, ...).
class DomainError final : public Error {
public:
    using Error::Error;
    std::string_view kind() const noexcept override { return "domain"; }
};

/// Numerical failure, e.g. an ill-conditioned matrix that must be inverted.
class NumericalError final : public Error {
public:
    using Error::Error;
    std::string_view kind() const noexcept override { return "numerical"; }
};

/// Requested quantity does not exist for the object (e.g. no closed form).
class UnsupportedError final : public Error {
public:
    using Error::Error;
    std::string_view kind() const noexcept override { return "unsupported"; }
};

void require_finite(const Vector& v, std::string_view what);
void require_dim(const Vector& v, std::size_t dim, std::string_view what);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Parameter domain
// ---------------------------------------------------------------------------

/// Closed L2 ball of radius R, optionally intersected with the nonnegative
/// orthant. An infinite radius gives an unconstrained domain.
class Domain {
public:
    static constexpr double kSlack = 1e-9;

    explicit Domain(double radius, bool nonnegative = false);
    static Domain unbounded() { return Domain(std::numeric_limits<double>::infinity()); }

    double radius() const noexcept { return radius_; }
    bool nonnegative() const noexcept { return nonnegative_; }
    bool bounded() const noexcept { return std::isfinite(radius_); }

    bool contains(const Vector& theta) const;
    Vector project(const Vector& theta) const;
    /// Same set with the radius reduced by `margin` (used to keep perturbed
    /// points feasible).
    Domain shrunk(double margin) const;

private:
    double radius_;
    bool nonnegative_;
};

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// A single data point z. When `split` is set, values[0..split) are the
/// features x and values[split..m) the label(s) y.
struct Instance {
    Vector values;
    std::optional<std::size_t> split;

    Instance() = default;
    Instance(Vector v, std::optional<std::size_t> s = std::nullopt);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.size()); }
    Eigen::VectorBlock<const Vector> features() const;
    Eigen::VectorBlock<const Vector> labels() const;
};

/// n draws stored column-wise (m x n). Column i is instance i.
struct SampleSet {
    Matrix values;
    std::optional<std::size_t> split;

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.cols()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.rows()); }
    Instance instance(std::size_t i) const;
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Derives an independent sub-stream seed from (seed, tag, index). All
/// randomness in the library flows through explicit seeds derived this way.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept;

/// xoshiro256** seeded through splitmix64. Cheap to construct, so every
/// sampling call can own its own generator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept;

    /// Uniform in [0, 1).
    double uniform() noexcept;
    double normal() noexcept;
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) noexcept;

private:
    std::uint64_t s_[4];
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

Vector standard_normal(Rng& rng, std::size_t dim);
/// Uniform direction on the unit sphere S^{d-1}.
Vector unit_sphere(Rng& rng, std::size_t dim);
/// Uniform point in the (bounded) domain.
Vector uniform_in(const Domain& domain, std::size_t dim, Rng& rng);

}  // namespace perfopt

#pragma once

#include "perfopt/core.hpp"

#include <memory>
#include <string>

namespace perfopt {

/// Regularity constants. An empty optional means "unknown".
struct LossConstants {
    std::optional<double> gamma;        // strong convexity in theta
    std::optional<double> beta;         // smoothness of grad_theta in z
    std::optional<double> gamma_z;      // strong convexity in z
    std::optional<double> lipschitz;    // in theta
    std::optional<double> lipschitz_z;  // in z
};

/// f(theta) = 0.5 theta^T H theta + g^T theta + c
struct QuadraticForm {
    Matrix H;
    Vector g;
    double c = 0.0;

    explicit QuadraticForm(std::size_t d);
    double value(const Vector& theta) const { return 0.5 * theta.dot(H * theta) + g.dot(theta) + c; }
};

/// l(z; theta) with analytic gradients in both arguments.
class Loss {
public:
    virtual ~Loss() = default;

    virtual std::string name() const = 0;
    virtual std::size_t param_dim() const = 0;
    virtual std::size_t data_dim() const = 0;
    /// Required feature/label split of instances, if any.
    virtual std::optional<std::size_t> required_split() const { return std::nullopt; }
    virtual bool convex_in_z() const = 0;

    virtual double value(const VecView& z, const Vector& theta) const = 0;
    virtual Vector grad_theta(const VecView& z, const Vector& theta) const = 0;
    virtual Vector grad_z(const VecView& z, const Vector& theta) const = 0;

    /// Loss of every column of Z at theta.
    virtual Vector values(const Matrix& Z, const Vector& theta) const;

    /// Adds sum_j l(B_j + M theta; theta) to q when that sum is exactly
    /// quadratic in theta. Returns false (leaving q untouched) otherwise.
    virtual bool add_quadratic(const Matrix& B, const Matrix& M, QuadraticForm& q) const;

    const LossConstants& constants() const noexcept { return constants_; }

    /// Validating entry points for structured instances.
    double value(const Instance& z, const Vector& theta) const;
    Vector grad_theta(const Instance& z, const Vector& theta) const;
    Vector grad_z(const Instance& z, const Vector& theta) const;

    /// Checks the shape of a sample set against this loss.
    void check(const SampleSet& samples) const;
    void check(const Instance& z) const;
    void check_theta(const Vector& theta) const;

protected:
    LossConstants constants_;
};

using LossPtr = std::shared_ptr<const Loss>;

/// 0.5 (y - theta^T x)^2 on z = (x, y), x in R^d. gamma and beta depend on
/// the data distribution and are supplied by the caller.
LossPtr squared_loss(std::size_t d, std::optional<double> gamma = std::nullopt,
                     std::optional<double> beta = std::nullopt);

/// -beta theta^T z + (gamma/2) ||theta||^2 on z in R^d.
LossPtr quadratic_example_loss(std::size_t d, double beta, double gamma);

/// log(1 + exp(x^T theta)) - y x^T theta + (lambda/2) ||theta||^2, y in {0, 1}.
LossPtr regularized_logistic_loss(std::size_t d, double lambda_reg, std::optional<double> beta = std::nullopt);

/// |y - theta^T x|; the subgradient at the kink is 0.
LossPtr absolute_loss(std::size_t d);

/// base + (z - z*)^T Q (z - z*). The penalty does not involve theta.
LossPtr regularized_loss(LossPtr base, Vector z_star, Matrix Q);

/// 0.5 ||z - theta||^2 on z in R^d.
LossPtr tracking_loss(std::size_t d);

}  // namespace perfopt

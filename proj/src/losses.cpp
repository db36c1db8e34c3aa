#include "perfopt/losses.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace perfopt {

QuadraticForm::QuadraticForm(std::size_t d)
    : H(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))),
      g(Vector::Zero(static_cast<Eigen::Index>(d))) {}

Vector Loss::values(const Matrix& Z, const Vector& theta) const {
    Vector out(Z.cols());
    for (Eigen::Index j = 0; j < Z.cols(); ++j) out[j] = value(Z.col(j), theta);
    return out;
}

bool Loss::add_quadratic(const Matrix&, const Matrix&, QuadraticForm&) const { return false; }

void Loss::check_theta(const Vector& theta) const {
    require_dim(theta, param_dim(), name() + ": theta");
}

void Loss::check(const Instance& z) const {
    require_dim(z.values, data_dim(), name() + ": instance");
    if (auto s = required_split()) {
        if (!z.split) throw ConfigError(name() + ": instance has no feature/label split");
        if (*z.split != *s) throw ConfigError(name() + ": instance split does not match the loss");
    }
}

void Loss::check(const SampleSet& samples) const {
    if (samples.dim() != data_dim())
        throw ConfigError(name() + ": sample dimension " + std::to_string(samples.dim()) + " does not match " +
                          std::to_string(data_dim()));
    if (auto s = required_split()) {
        if (!samples.split) throw ConfigError(name() + ": samples have no feature/label split");
        if (*samples.split != *s) throw ConfigError(name() + ": sample split does not match the loss");
    }
}

double Loss::value(const Instance& z, const Vector& theta) const {
    check(z);
    check_theta(theta);
    return value(VecView(z.values), theta);
}

Vector Loss::grad_theta(const Instance& z, const Vector& theta) const {
    check(z);
    check_theta(theta);
    return grad_theta(VecView(z.values), theta);
}

Vector Loss::grad_z(const Instance& z, const Vector& theta) const {
    check(z);
    check_theta(theta);
    return grad_z(VecView(z.values), theta);
}

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double sign(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

/// Shared layout of the supervised losses: z = (x, y) with scalar y.
class SupervisedLoss : public Loss {
public:
    explicit SupervisedLoss(std::size_t d) : d_(d) {
        if (d == 0) throw ConfigError("loss dimension must be at least 1");
    }
    std::size_t param_dim() const override { return d_; }
    std::size_t data_dim() const override { return d_ + 1; }
    std::optional<std::size_t> required_split() const override { return d_; }

protected:
    auto x(const VecView& z) const { return z.head(idx(d_)); }
    double y(const VecView& z) const { return z[idx(d_)]; }

    std::size_t d_;
};

class SquaredLoss final : public SupervisedLoss {
public:
    SquaredLoss(std::size_t d, std::optional<double> gamma, std::optional<double> beta) : SupervisedLoss(d) {
        constants_.gamma = gamma;
        constants_.beta = beta;
        constants_.gamma_z = 1.0;
    }
    std::string name() const override { return "squared"; }
    bool convex_in_z() const override { return true; }

    double value(const VecView& z, const Vector& theta) const override {
        const double r = y(z) - theta.dot(x(z));
        return 0.5 * r * r;
    }
    Vector grad_theta(const VecView& z, const Vector& theta) const override {
        return -(y(z) - theta.dot(x(z))) * x(z);
    }
    Vector grad_z(const VecView& z, const Vector& theta) const override {
        const double r = y(z) - theta.dot(x(z));
        Vector g(idx(d_ + 1));
        g.head(idx(d_)) = -r * theta;
        g[idx(d_)] = r;
        return g;
    }
    Vector values(const Matrix& Z, const Vector& theta) const override {
        const Vector r = Z.row(idx(d_)).transpose() - Z.topRows(idx(d_)).transpose() * theta;
        return 0.5 * r.array().square();
    }

    bool add_quadratic(const Matrix& B, const Matrix& M, QuadraticForm& q) const override {
        // Quartic in theta once the features move with theta.
        if (!M.topRows(idx(d_)).isZero(0.0)) return false;
        // r_j = y_j + m_y^T theta - theta^T x_j = y_j - a_j^T theta
        const Matrix A = B.topRows(idx(d_)).colwise() - M.row(idx(d_)).transpose();
        const Vector yv = B.row(idx(d_)).transpose();
        q.H.noalias() += A * A.transpose();
        q.g.noalias() -= A * yv;
        q.c += 0.5 * yv.squaredNorm();
        return true;
    }
};

class AbsoluteLoss final : public SupervisedLoss {
public:
    explicit AbsoluteLoss(std::size_t d) : SupervisedLoss(d) {
        constants_.gamma = 0.0;
        constants_.gamma_z = 0.0;
    }
    std::string name() const override { return "absolute"; }
    bool convex_in_z() const override { return true; }

    double value(const VecView& z, const Vector& theta) const override {
        return std::abs(y(z) - theta.dot(x(z)));
    }
    Vector grad_theta(const VecView& z, const Vector& theta) const override {
        return -sign(y(z) - theta.dot(x(z))) * x(z);
    }
    Vector grad_z(const VecView& z, const Vector& theta) const override {
        const double s = sign(y(z) - theta.dot(x(z)));
        Vector g(idx(d_ + 1));
        g.head(idx(d_)) = -s * theta;
        g[idx(d_)] = s;
        return g;
    }
};

class LogisticLoss final : public SupervisedLoss {
public:
    LogisticLoss(std::size_t d, double lambda, std::optional<double> beta) : SupervisedLoss(d), lambda_(lambda) {
        if (!(lambda >= 0.0)) throw ConfigError("logistic loss: regularization must be nonnegative");
        constants_.gamma = lambda;
        constants_.beta = beta;
    }
    std::string name() const override { return "regularized_logistic"; }
    bool convex_in_z() const override { return false; }

    double value(const VecView& z, const Vector& theta) const override {
        const double s = theta.dot(x(z));
        return softplus(s) - label(z) * s + 0.5 * lambda_ * theta.squaredNorm();
    }
    Vector grad_theta(const VecView& z, const Vector& theta) const override {
        const double s = theta.dot(x(z));
        return (sigmoid(s) - label(z)) * x(z) + lambda_ * theta;
    }
    Vector grad_z(const VecView& z, const Vector& theta) const override {
        const double s = theta.dot(x(z));
        Vector g(idx(d_ + 1));
        g.head(idx(d_)) = (sigmoid(s) - label(z)) * theta;
        g[idx(d_)] = -s;
        return g;
    }
    Vector values(const Matrix& Z, const Vector& theta) const override {
        const Vector s = Z.topRows(idx(d_)).transpose() * theta;
        const double reg = 0.5 * lambda_ * theta.squaredNorm();
        Vector out(Z.cols());
        for (Eigen::Index j = 0; j < Z.cols(); ++j) out[j] = softplus(s[j]) - label(Z.col(j)) * s[j] + reg;
        return out;
    }

    static double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }
    static double sigmoid(double s) {
        if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
        const double e = std::exp(s);
        return e / (1.0 + e);
    }

private:
    double label(const VecView& z) const {
        const double v = y(z);
        if (v != 0.0 && v != 1.0) throw DomainError("logistic loss: label must be 0 or 1, got " + std::to_string(v));
        return v;
    }

    double lambda_;
};

class QuadraticExampleLoss final : public Loss {
public:
    QuadraticExampleLoss(std::size_t d, double beta, double gamma) : d_(d), beta_(beta), gamma_(gamma) {
        if (d == 0) throw ConfigError("quadratic example loss: dimension must be at least 1");
        if (!(beta > 0.0) || !(gamma > 0.0)) throw ConfigError("quadratic example loss: beta and gamma must be positive");
        constants_.gamma = gamma;
        constants_.beta = beta;
        constants_.gamma_z = 0.0;
    }
    std::string name() const override { return "quadratic_example"; }
    std::size_t param_dim() const override { return d_; }
    std::size_t data_dim() const override { return d_; }
    bool convex_in_z() const override { return true; }

    double value(const VecView& z, const Vector& theta) const override {
        return -beta_ * theta.dot(z) + 0.5 * gamma_ * theta.squaredNorm();
    }
    Vector grad_theta(const VecView& z, const Vector& theta) const override { return -beta_ * z + gamma_ * theta; }
    Vector grad_z(const VecView&, const Vector& theta) const override { return -beta_ * theta; }

    bool add_quadratic(const Matrix& B, const Matrix& M, QuadraticForm& q) const override {
        const auto n = static_cast<double>(B.cols());
        q.H += n * (gamma_ * Matrix::Identity(idx(d_), idx(d_)) - beta_ * (M + M.transpose()));
        q.g -= beta_ * B.rowwise().sum();
        return true;
    }

private:
    std::size_t d_;
    double beta_;
    double gamma_;
};

class TrackingLoss final : public Loss {
public:
    explicit TrackingLoss(std::size_t d) : d_(d) {
        if (d == 0) throw ConfigError("tracking loss: dimension must be at least 1");
        constants_.gamma = 1.0;
        constants_.beta = 1.0;
        constants_.gamma_z = 1.0;
    }
    std::string name() const override { return "tracking"; }
    std::size_t param_dim() const override { return d_; }
    std::size_t data_dim() const override { return d_; }
    bool convex_in_z() const override { return true; }

    double value(const VecView& z, const Vector& theta) const override { return 0.5 * (z - theta).squaredNorm(); }
    Vector grad_theta(const VecView& z, const Vector& theta) const override { return theta - z; }
    Vector grad_z(const VecView& z, const Vector& theta) const override { return z - theta; }
    Vector values(const Matrix& Z, const Vector& theta) const override {
        return 0.5 * (Z.colwise() - theta).colwise().squaredNorm().transpose();
    }

    bool add_quadratic(const Matrix& B, const Matrix& M, QuadraticForm& q) const override {
        const auto n = static_cast<double>(B.cols());
        const Matrix K = M - Matrix::Identity(idx(d_), idx(d_));
        q.H.noalias() += n * K.transpose() * K;
        q.g.noalias() += K.transpose() * B.rowwise().sum();
        q.c += 0.5 * B.squaredNorm();
        return true;
    }

private:
    std::size_t d_;
};

class RegularizedLoss final : public Loss {
public:
    RegularizedLoss(LossPtr base, Vector z_star, Matrix Q)
        : base_(std::move(base)), z_star_(std::move(z_star)), Q_(std::move(Q)) {
        if (!base_) throw ConfigError("regularized loss: missing base loss");
        const auto m = idx(base_->data_dim());
        require_dim(z_star_, base_->data_dim(), "regularized loss: z*");
        require_finite(z_star_, "regularized loss: z*");
        if (Q_.rows() != m || Q_.cols() != m) throw ConfigError("regularized loss: Q must be m x m");
        if (!Q_.allFinite() || (Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q_.cwiseAbs().maxCoeff()))
            throw DomainError("regularized loss: Q must be symmetric");
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(Q_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (lmin < -1e-12 * std::max(1.0, Q_.cwiseAbs().maxCoeff()))
            throw DomainError("regularized loss: Q is not positive semidefinite");
        constants_ = base_->constants();
        if (constants_.gamma_z) *constants_.gamma_z += 2.0 * std::max(0.0, lmin);
        // The penalty is unbounded in z, so Lipschitz constants in z are lost.
        constants_.lipschitz_z.reset();
    }
    std::string name() const override { return "regularized_" + base_->name(); }
    std::size_t param_dim() const override { return base_->param_dim(); }
    std::size_t data_dim() const override { return base_->data_dim(); }
    std::optional<std::size_t> required_split() const override { return base_->required_split(); }
    bool convex_in_z() const override { return base_->convex_in_z(); }

    double value(const VecView& z, const Vector& theta) const override {
        const Vector r = z - z_star_;
        return base_->value(z, theta) + r.dot(Q_ * r);
    }
    Vector grad_theta(const VecView& z, const Vector& theta) const override { return base_->grad_theta(z, theta); }
    Vector grad_z(const VecView& z, const Vector& theta) const override {
        return base_->grad_z(z, theta) + 2.0 * Q_ * (z - z_star_);
    }
    Vector values(const Matrix& Z, const Vector& theta) const override {
        const Matrix R = Z.colwise() - z_star_;
        return base_->values(Z, theta) + (R.cwiseProduct(Q_ * R)).colwise().sum().transpose();
    }

    bool add_quadratic(const Matrix& B, const Matrix& M, QuadraticForm& q) const override {
        QuadraticForm inner(param_dim());
        if (!base_->add_quadratic(B, M, inner)) return false;
        const auto n = static_cast<double>(B.cols());
        const Matrix R = B.colwise() - z_star_;
        const Matrix QM = Q_ * M;
        q.H += inner.H + 2.0 * n * M.transpose() * QM;
        q.g += inner.g + 2.0 * QM.transpose() * R.rowwise().sum();
        q.c += inner.c + (R.cwiseProduct(Q_ * R)).sum();
        return true;
    }

private:
    LossPtr base_;
    Vector z_star_;
    Matrix Q_;
};

}  // namespace

LossPtr squared_loss(std::size_t d, std::optional<double> gamma, std::optional<double> beta) {
    if ((gamma && *gamma < 0.0) || (beta && *beta < 0.0)) throw DomainError("squared loss: negative constant");
    return std::make_shared<SquaredLoss>(d, gamma, beta);
}

LossPtr quadratic_example_loss(std::size_t d, double beta, double gamma) {
    return std::make_shared<QuadraticExampleLoss>(d, beta, gamma);
}

LossPtr regularized_logistic_loss(std::size_t d, double lambda_reg, std::optional<double> beta) {
    if (beta && *beta < 0.0) throw DomainError("logistic loss: negative beta");
    return std::make_shared<LogisticLoss>(d, lambda_reg, beta);
}

LossPtr absolute_loss(std::size_t d) { return std::make_shared<AbsoluteLoss>(d); }

LossPtr regularized_loss(LossPtr base, Vector z_star, Matrix Q) {
    return std::make_shared<RegularizedLoss>(std::move(base), std::move(z_star), std::move(Q));
}

LossPtr tracking_loss(std::size_t d) { return std::make_shared<TrackingLoss>(d); }

}  // namespace perfopt

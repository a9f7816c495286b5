#pragma once

// Exponential-family beliefs used by the estimator: a multivariate Gaussian
// over coefficients kept in information form (precision and
// precision-weighted mean), and a shape/rate Gamma over the noise precision.
// Information form is canonical here because likelihood messages carry a
// rank-1, merely positive semi-definite precision that must never be
// inverted; full posterior beliefs stay positive definite.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <sstream>

#include "narmax/errors.hpp"

namespace narmax {

namespace detail {

/// Digamma via recurrence shift into x >= 10 followed by the asymptotic
/// Bernoulli series. Absolute accuracy ~1e-13 for arguments >= 1e-3.
template <typename Scalar>
Scalar digamma(Scalar x) {
    if (!(x > Scalar(0)) || !std::isfinite(x)) {
        throw ContractViolation("digamma: argument must be finite and > 0");
    }
    Scalar shifted = 0;
    while (x < Scalar(10)) {
        shifted -= Scalar(1) / x;
        x += Scalar(1);
    }
    const Scalar inv = Scalar(1) / x;
    const Scalar u = inv * inv;
    // ln x - 1/(2x) - sum_{n>=1} B_{2n} / (2n x^{2n}), truncated at n = 6.
    const Scalar tail =
        u * (Scalar(1.0 / 12) -
             u * (Scalar(1.0 / 120) -
                  u * (Scalar(1.0 / 252) -
                       u * (Scalar(1.0 / 240) -
                            u * (Scalar(1.0 / 132) - u * Scalar(691.0 / 32760))))));
    return shifted + std::log(x) - inv / 2 - tail;
}

/// Cholesky factorization guarded against indefiniteness and
/// ill-conditioning. The condition estimate is the squared ratio of the
/// extreme Cholesky diagonal entries, a cheap lower bound on kappa_2.
template <typename Matrix>
Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericalConditioning(std::string(what) +
                                    ": matrix is not positive definite");
    }
    const auto diag = llt.matrixLLT().diagonal();
    const auto dmin = diag.minCoeff();
    const auto dmax = diag.maxCoeff();
    if (!(dmin > 0) || !std::isfinite(dmax)) {
        throw NumericalConditioning(std::string(what) +
                                    ": matrix is not positive definite");
    }
    const auto ratio = dmax / dmin;
    if (ratio * ratio > 1e12) {
        throw NumericalConditioning(std::string(what) +
                                    ": condition number estimate exceeds 1e12");
    }
    return llt;
}

}  // namespace detail

/// Multivariate Gaussian in information form: precision Lambda and
/// precision-weighted mean Lambda*mu. The precision may be positive
/// semi-definite (likelihood messages); moment queries require positive
/// definiteness and go through a guarded Cholesky factorization.
template <typename Scalar = double>
class GaussianBelief {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    GaussianBelief(Matrix precision, Vector precision_weighted_mean)
        : precision_(std::move(precision)), pwm_(std::move(precision_weighted_mean)) {
        if (precision_.rows() != precision_.cols() ||
            precision_.rows() != pwm_.size()) {
            throw ContractViolation("GaussianBelief: dimension mismatch");
        }
        if (!precision_.allFinite() || !pwm_.allFinite()) {
            throw ContractViolation("GaussianBelief: non-finite parameters");
        }
        const Scalar scale = precision_.template lpNorm<Eigen::Infinity>();
        const Scalar asym =
            (precision_ - precision_.transpose()).template lpNorm<Eigen::Infinity>();
        if (asym > Scalar(1e-10) * (Scalar(1) + scale)) {
            throw ContractViolation("GaussianBelief: precision is not symmetric");
        }
        precision_ = ((precision_ + precision_.transpose()) / 2).eval();
    }

    static GaussianBelief from_moments(const Vector& mean, const Matrix& covariance) {
        auto llt = detail::spd_factor(covariance, "GaussianBelief::from_moments");
        Matrix precision = llt.solve(Matrix::Identity(mean.size(), mean.size()));
        Vector pwm = precision.template selfadjointView<Eigen::Lower>() * mean;
        return GaussianBelief(std::move(precision), std::move(pwm));
    }

    static GaussianBelief isotropic(Eigen::Index dim, Scalar precision,
                                    Scalar mean_value = Scalar(0)) {
        Matrix lambda = Matrix::Identity(dim, dim) * precision;
        Vector pwm = Vector::Constant(dim, precision * mean_value);
        return GaussianBelief(std::move(lambda), std::move(pwm));
    }

    Eigen::Index dim() const { return pwm_.size(); }
    const Matrix& precision() const { return precision_; }
    const Vector& precision_weighted_mean() const { return pwm_; }

    Vector mean() const { return factor("GaussianBelief::mean").solve(pwm_); }

    Matrix covariance() const {
        return factor("GaussianBelief::covariance")
            .solve(Matrix::Identity(dim(), dim()));
    }

    /// phi^T Lambda^{-1} phi, the parameter-uncertainty quadratic form.
    Scalar covariance_quadratic_form(const Vector& phi) const {
        if (phi.size() != dim()) {
            throw ContractViolation("covariance_quadratic_form: dimension mismatch");
        }
        return phi.dot(factor("GaussianBelief::covariance_quadratic_form").solve(phi));
    }

    Scalar log_det_precision() const {
        return 2 * factor("GaussianBelief::log_det_precision")
                       .matrixLLT()
                       .diagonal()
                       .array()
                       .log()
                       .sum();
    }

    bool is_positive_definite() const {
        Eigen::LLT<Matrix> llt(precision_);
        return llt.info() == Eigen::Success &&
               llt.matrixLLT().diagonal().minCoeff() > Scalar(0);
    }

private:
    Eigen::LLT<Matrix> factor(const char* what) const {
        return detail::spd_factor(precision_, what);
    }

    Matrix precision_;
    Vector pwm_;
};

/// Gamma belief over a precision parameter, shape/rate parameterization.
template <typename Scalar = double>
class GammaBelief {
public:
    GammaBelief(Scalar shape, Scalar rate) : shape_(shape), rate_(rate) {
        if (!(shape_ > Scalar(0)) || !(rate_ > Scalar(0)) ||
            !std::isfinite(shape_) || !std::isfinite(rate_)) {
            throw ContractViolation("GammaBelief: shape and rate must be finite and > 0");
        }
    }

    Scalar shape() const { return shape_; }
    Scalar rate() const { return rate_; }

    Scalar mean() const { return shape_ / rate_; }
    Scalar variance() const { return shape_ / (rate_ * rate_); }
    Scalar expected_log() const { return detail::digamma(shape_) - std::log(rate_); }

private:
    Scalar shape_;
    Scalar rate_;
};

template <typename Scalar>
struct GammaMoments {
    Scalar mean;
    Scalar variance;
    Scalar e_log;
};

template <typename Scalar>
GammaMoments<Scalar> gamma_moments(const GammaBelief<Scalar>& g) {
    return {g.mean(), g.variance(), g.expected_log()};
}

/// Product of two Gaussian densities: precisions and precision-weighted
/// means add.
template <typename Scalar>
GaussianBelief<Scalar> gaussian_product(const GaussianBelief<Scalar>& a,
                                        const GaussianBelief<Scalar>& b) {
    if (a.dim() != b.dim()) {
        throw ContractViolation("gaussian_product: dimension mismatch");
    }
    return GaussianBelief<Scalar>(
        a.precision() + b.precision(),
        a.precision_weighted_mean() + b.precision_weighted_mean());
}

/// Product of two Gamma densities: shapes add minus one, rates add.
template <typename Scalar>
GammaBelief<Scalar> gamma_product(const GammaBelief<Scalar>& a,
                                  const GammaBelief<Scalar>& b) {
    const Scalar shape = a.shape() + b.shape() - Scalar(1);
    if (!(shape > Scalar(0))) {
        std::ostringstream msg;
        msg << "gamma_product: resulting shape " << shape << " is not positive";
        throw DegenerateBelief(msg.str());
    }
    return GammaBelief<Scalar>(shape, a.rate() + b.rate());
}

/// KL(q || p) between multivariate Gaussians, both positive definite.
template <typename Scalar>
Scalar gaussian_kl(const GaussianBelief<Scalar>& q, const GaussianBelief<Scalar>& p) {
    if (q.dim() != p.dim()) {
        throw ContractViolation("gaussian_kl: dimension mismatch");
    }
    using Matrix = typename GaussianBelief<Scalar>::Matrix;
    const auto llt_q = detail::spd_factor(q.precision(), "gaussian_kl: q");
    const auto llt_p = detail::spd_factor(p.precision(), "gaussian_kl: p");

    const auto log_det = [](const Eigen::LLT<Matrix>& llt) {
        return 2 * llt.matrixLLT().diagonal().array().log().sum();
    };
    const Matrix sigma_q_lambda_p = llt_q.solve(p.precision());
    const auto mu_q = llt_q.solve(q.precision_weighted_mean());
    const auto mu_p = llt_p.solve(p.precision_weighted_mean());
    const auto diff = (mu_q - mu_p).eval();
    const Scalar mahal = diff.dot(p.precision().template selfadjointView<Eigen::Lower>() * diff);
    return (sigma_q_lambda_p.trace() + mahal - Scalar(q.dim()) + log_det(llt_q) -
            log_det(llt_p)) /
           2;
}

/// KL(q || p) between shape/rate Gammas.
template <typename Scalar>
Scalar gamma_kl(const GammaBelief<Scalar>& q, const GammaBelief<Scalar>& p) {
    return (q.shape() - p.shape()) * detail::digamma(q.shape()) -
           std::lgamma(q.shape()) + std::lgamma(p.shape()) +
           p.shape() * (std::log(q.rate()) - std::log(p.rate())) +
           q.shape() * (p.rate() - q.rate()) / q.rate();
}

}  // namespace narmax

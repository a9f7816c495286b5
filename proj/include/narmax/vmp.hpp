#pragma once

// Recursive variational message-passing estimator for polynomial NARMAX
// coefficients and noise precision. Each observation triggers a fixed
// coordinate-descent schedule: the Gaussian coefficient factor and the Gamma
// precision factor are alternately recombined with a snapshot of the
// previous posterior until the free energy stops moving.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <vector>

#include "narmax/basis.hpp"
#include "narmax/beliefs.hpp"
#include "narmax/errors.hpp"

namespace narmax {

struct VmpSettings {
    int n_iterations = 10;
    double fe_tolerance = 1e-8;

    void validate() const {
        if (n_iterations < 1) {
            throw ContractViolation("VmpSettings: n_iterations must be >= 1");
        }
        if (fe_tolerance < 0) {
            throw ContractViolation("VmpSettings: fe_tolerance must be >= 0");
        }
    }
};

/// Free-energy values, one per coordinate-descent iteration within a step.
template <typename Scalar = double>
using FreeEnergyTrace = std::vector<Scalar>;

/// Welford accumulator for the stream of observed outputs; used to scale
/// the divergence threshold of downstream simulations.
template <typename Scalar = double>
struct RunningStats {
    long long count = 0;
    Scalar mean = 0;
    Scalar m2 = 0;

    void push(Scalar x) {
        ++count;
        const Scalar delta = x - mean;
        mean += delta / Scalar(count);
        m2 += delta * (x - mean);
    }

    Scalar variance() const { return count > 1 ? m2 / Scalar(count) : Scalar(0); }
    Scalar stddev() const { return std::sqrt(variance()); }

    friend bool operator==(const RunningStats&, const RunningStats&) = default;
};

template <typename Scalar = double>
struct EstimatorState {
    BasisSpec spec;
    GaussianBelief<Scalar> theta;
    GammaBelief<Scalar> tau;
    RegressorBuffer<Scalar> buffer;
    Scalar last_prediction = 0;
    long long step_index = 0;
    RunningStats<Scalar> output_stats;
};

/// Fresh state from prior beliefs; buffer zero-initialized.
template <typename Scalar>
EstimatorState<Scalar> initial_state(const BasisSpec& spec,
                                     GaussianBelief<Scalar> prior_theta,
                                     GammaBelief<Scalar> prior_tau) {
    if (prior_theta.dim() != spec.dimension()) {
        throw ContractViolation("initial_state: prior dimension != basis dimension");
    }
    return EstimatorState<Scalar>{spec, std::move(prior_theta), std::move(prior_tau),
                                  RegressorBuffer<Scalar>(spec.config())};
}

template <typename Scalar>
EstimatorState<Scalar> initial_state(const BasisSpec& spec, Scalar prior_mean,
                                     Scalar prior_precision, Scalar prior_shape,
                                     Scalar prior_rate) {
    return initial_state(
        spec,
        GaussianBelief<Scalar>::isotropic(spec.dimension(), prior_precision, prior_mean),
        GammaBelief<Scalar>(prior_shape, prior_rate));
}

/// Likelihood message toward the coefficients: a Gaussian in information
/// form with rank-1 precision E[tau] * phi phi^T and precision-weighted mean
/// E[tau] * y * phi. The precision is only PSD and is never inverted.
template <typename Scalar>
GaussianBelief<Scalar> message_theta(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& phi, Scalar y,
    const GammaBelief<Scalar>& tau) {
    if (!phi.allFinite() || !std::isfinite(y)) {
        throw NonFiniteSignal("message_theta: non-finite input");
    }
    const Scalar e_tau = tau.mean();
    using Matrix = typename GaussianBelief<Scalar>::Matrix;
    Matrix precision = e_tau * (phi * phi.transpose());
    return GaussianBelief<Scalar>(std::move(precision), (e_tau * y) * phi);
}

/// Likelihood message toward the noise precision: Gamma with shape 3/2 and
/// rate (residual^2 + phi^T Lambda^{-1} phi) / 2. The rate is floored at
/// 1e-12 so the resulting belief stays inside the family when both terms
/// vanish (all-zero signals).
template <typename Scalar>
GammaBelief<Scalar> message_tau(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& phi,
                                Scalar y, const GaussianBelief<Scalar>& theta) {
    if (!phi.allFinite() || !std::isfinite(y)) {
        throw NonFiniteSignal("message_tau: non-finite input");
    }
    const Scalar residual = y - theta.mean().dot(phi);
    const Scalar spread = theta.covariance_quadratic_form(phi);
    const Scalar rate = (residual * residual + spread) / 2;
    return GammaBelief<Scalar>(Scalar(1.5), std::max(rate, Scalar(1e-12)));
}

/// Variational free energy of the factorized recognition model against the
/// step's snapshot priors: complexity (two KL terms) minus accuracy (the
/// expected log-likelihood of the observation).
template <typename Scalar>
Scalar free_energy(const GaussianBelief<Scalar>& q_theta,
                   const GammaBelief<Scalar>& q_tau,
                   const GaussianBelief<Scalar>& prior_theta,
                   const GammaBelief<Scalar>& prior_tau,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& phi, Scalar y) {
    const Scalar complexity =
        gaussian_kl(q_theta, prior_theta) + gamma_kl(q_tau, prior_tau);
    const Scalar residual = y - q_theta.mean().dot(phi);
    const Scalar spread = q_theta.covariance_quadratic_form(phi);
    const Scalar accuracy =
        (q_tau.expected_log() - std::log(Scalar(2) * std::numbers::pi_v<Scalar>)) / 2 -
        q_tau.mean() * (residual * residual + spread) / 2;
    return complexity - accuracy;
}

/// Process one observation (u, y): expand the regressor, iterate the
/// coordinate updates against the snapshot priors, then roll the buffer
/// forward with the prediction error of this step.
template <typename Scalar>
FreeEnergyTrace<Scalar> vmp_step(EstimatorState<Scalar>& state, Scalar u, Scalar y,
                                 const VmpSettings& settings) {
    settings.validate();
    if (!std::isfinite(u) || !std::isfinite(y)) {
        throw NonFiniteSignal("vmp_step: non-finite observation");
    }
    const auto phi = expand(state.spec, u, state.buffer);

    // Messages (1) and (3) are the previous posterior, fixed for the whole
    // step; recombining with the snapshot keeps the observation counted once.
    const GaussianBelief<Scalar> prior_theta = state.theta;
    const GammaBelief<Scalar> prior_tau = state.tau;
    GaussianBelief<Scalar> q_theta = prior_theta;
    GammaBelief<Scalar> q_tau = prior_tau;

    FreeEnergyTrace<Scalar> trace;
    trace.reserve(static_cast<std::size_t>(settings.n_iterations));
    for (int it = 0; it < settings.n_iterations; ++it) {
        q_theta = gaussian_product(prior_theta, message_theta(phi, y, q_tau));
        q_tau = gamma_product(prior_tau, message_tau(phi, y, q_theta));
        trace.push_back(free_energy(q_theta, q_tau, prior_theta, prior_tau, phi, y));
        if (it > 0 && std::abs(trace[static_cast<std::size_t>(it)] -
                               trace[static_cast<std::size_t>(it) - 1]) <
                          Scalar(settings.fe_tolerance)) {
            break;
        }
    }

    state.theta = std::move(q_theta);
    state.tau = std::move(q_tau);
    const Scalar error = y - state.last_prediction;
    state.buffer.push(u, y, error);
    state.output_stats.push(y);
    ++state.step_index;
    return trace;
}

}  // namespace narmax

#pragma once

// One-step-ahead posterior prediction and free-run simulation. Simulation
// freezes the parameter estimates, feeds MAP predictions back into the
// output history and zero-pads the error history. The same machinery drives
// the point-estimate baselines through a degenerate (zero-variance) model.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "narmax/basis.hpp"
#include "narmax/beliefs.hpp"
#include "narmax/errors.hpp"
#include "narmax/vmp.hpp"

namespace narmax {

template <typename Scalar = double>
struct PredictiveDistribution {
    Scalar mean;
    Scalar variance;
};

template <typename Scalar>
Scalar map_prediction(const PredictiveDistribution<Scalar>& p) {
    return p.mean;  // mode of a Gaussian
}

/// Gaussian approximation of the one-step-ahead posterior predictive:
/// mean mu^T phi, variance phi^T Lambda^{-1} phi + beta/alpha.
template <typename Scalar>
PredictiveDistribution<Scalar> posterior_predictive(const EstimatorState<Scalar>& state,
                                                    Scalar u_next) {
    const auto phi = expand(state.spec, u_next, state.buffer);
    return {state.theta.mean().dot(phi),
            state.theta.covariance_quadratic_form(phi) +
                state.tau.rate() / state.tau.shape()};
}

template <typename Scalar = double>
struct SimulationResult {
    std::vector<Scalar> predictions;
    std::vector<Scalar> variances;
    bool diverged = false;
    std::optional<std::size_t> diverged_at;
};

/// Parameter estimates frozen for evaluation. `covariance` and
/// `noise_variance` stay empty/zero for point estimators.
template <typename Scalar = double>
struct FrozenModel {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
    std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> covariance;
    Scalar noise_variance = 0;
};

template <typename Scalar>
FrozenModel<Scalar> freeze(const EstimatorState<Scalar>& state) {
    return {state.theta.mean(), state.theta.covariance(),
            state.tau.rate() / state.tau.shape()};
}

/// |y_hat| ceiling marking a diverged run: factor times the spread of the
/// training outputs, floored at 1.
template <typename Scalar>
Scalar divergence_threshold(const RunningStats<Scalar>& training_outputs,
                            Scalar factor = Scalar(1e4)) {
    return factor * std::max(Scalar(1), training_outputs.stddev());
}

/// Free-run simulation over the input sequence with a private zero-initialized
/// buffer: the output history receives the model's own MAP predictions, the
/// error history stays zero. Stops early when a prediction is non-finite or
/// exceeds the threshold; divergence is recorded, not thrown.
template <typename Scalar>
SimulationResult<Scalar> simulate(const FrozenModel<Scalar>& model,
                                  const BasisSpec& spec,
                                  std::span<const Scalar> inputs, Scalar threshold) {
    SimulationResult<Scalar> result;
    result.predictions.reserve(inputs.size());
    result.variances.reserve(inputs.size());
    RegressorBuffer<Scalar> buffer(spec.config());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phi(spec.dimension());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        expand_into(spec, inputs[i], buffer, phi);
        const Scalar y_hat = model.weights.dot(phi);
        if (!std::isfinite(y_hat) || std::abs(y_hat) > threshold) {
            result.diverged = true;
            result.diverged_at = i;
            return result;
        }
        Scalar variance = model.noise_variance;
        if (model.covariance) {
            variance += phi.dot(model.covariance->template selfadjointView<Eigen::Lower>() * phi);
        }
        result.predictions.push_back(y_hat);
        result.variances.push_back(variance);
        buffer.push(inputs[i], y_hat, Scalar(0));
    }
    return result;
}

template <typename Scalar>
SimulationResult<Scalar> simulate(const EstimatorState<Scalar>& state,
                                  std::span<const Scalar> inputs,
                                  Scalar threshold_factor = Scalar(1e4)) {
    return simulate(freeze(state), state.spec, inputs,
                    divergence_threshold(state.output_stats, threshold_factor));
}

/// One-step-ahead prediction with frozen parameters: the buffer streams the
/// true inputs and outputs while the error history receives y - y_hat.
/// Divergence through the error-feedback path is detected the same way as in
/// free-run simulation.
template <typename Scalar>
SimulationResult<Scalar> one_step_frozen(const FrozenModel<Scalar>& model,
                                         const BasisSpec& spec,
                                         std::span<const Scalar> inputs,
                                         std::span<const Scalar> outputs,
                                         Scalar threshold) {
    if (inputs.size() != outputs.size()) {
        throw ContractViolation("one_step_frozen: inputs/outputs length mismatch");
    }
    SimulationResult<Scalar> result;
    result.predictions.reserve(inputs.size());
    result.variances.reserve(inputs.size());
    RegressorBuffer<Scalar> buffer(spec.config());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phi(spec.dimension());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        expand_into(spec, inputs[i], buffer, phi);
        const Scalar y_hat = model.weights.dot(phi);
        if (!std::isfinite(y_hat) || std::abs(y_hat) > threshold) {
            result.diverged = true;
            result.diverged_at = i;
            return result;
        }
        Scalar variance = model.noise_variance;
        if (model.covariance) {
            variance += phi.dot(model.covariance->template selfadjointView<Eigen::Lower>() * phi);
        }
        result.predictions.push_back(y_hat);
        result.variances.push_back(variance);
        buffer.push(inputs[i], outputs[i], outputs[i] - y_hat);
    }
    return result;
}

/// Online identification loop: predict y_hat_k from the current state (the
/// prediction "made at k-1"), then absorb the observation with a vmp step.
/// Returns the prediction sequence; the state is updated in place.
template <typename Scalar>
std::vector<Scalar> one_step_sequence(EstimatorState<Scalar>& state,
                                      std::span<const Scalar> inputs,
                                      std::span<const Scalar> outputs,
                                      const VmpSettings& settings,
                                      std::vector<FreeEnergyTrace<Scalar>>* traces = nullptr) {
    if (inputs.size() != outputs.size()) {
        throw ContractViolation("one_step_sequence: inputs/outputs length mismatch");
    }
    std::vector<Scalar> predictions;
    predictions.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Scalar y_hat = map_prediction(posterior_predictive(state, inputs[k]));
        state.last_prediction = y_hat;
        auto trace = vmp_step(state, inputs[k], outputs[k], settings);
        if (traces) traces->push_back(std::move(trace));
        predictions.push_back(y_hat);
    }
    return predictions;
}

}  // namespace narmax

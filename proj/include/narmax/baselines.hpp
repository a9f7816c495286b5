#pragma once

// Point-estimate baselines sharing the polynomial regressor with the
// variational estimator: exponentially-weighted recursive least squares
// (online) and iterative least squares with residual refitting (offline).

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <vector>

#include "narmax/basis.hpp"
#include "narmax/errors.hpp"
#include "narmax/vmp.hpp"

namespace narmax {

template <typename Scalar = double>
struct RlsState {
    BasisSpec spec;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inverse_correlation;
    Scalar forgetting = 1;
    RegressorBuffer<Scalar> buffer;
    Scalar last_prediction = 0;
    long long step_index = 0;
    RunningStats<Scalar> output_stats;
    bool diverged = false;
};

/// Zero weights, inverse correlation delta * I.
template <typename Scalar>
RlsState<Scalar> initial_rls(const BasisSpec& spec, Scalar delta = Scalar(1e4),
                             Scalar forgetting = Scalar(1)) {
    if (!(delta > 0) || !(forgetting > 0) || forgetting > 1) {
        throw ContractViolation("initial_rls: need delta > 0 and forgetting in (0,1]");
    }
    const Eigen::Index d = spec.dimension();
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    return RlsState<Scalar>{spec,
                            Vector::Zero(d),
                            Matrix::Identity(d, d) * delta,
                            forgetting,
                            RegressorBuffer<Scalar>(spec.config())};
}

/// Standard RLS update on the expanded regressor, with the a-priori
/// prediction error pushed into the buffer (same ordering as the
/// variational pipeline). A non-finite update freezes the state and sets
/// the diverged flag.
template <typename Scalar>
void rls_step(RlsState<Scalar>& state, Scalar u, Scalar y) {
    if (state.diverged) return;
    if (!std::isfinite(u) || !std::isfinite(y)) {
        state.diverged = true;
        return;
    }
    const auto phi = expand(state.spec, u, state.buffer);
    const Scalar y_hat = state.weights.dot(phi);
    const Scalar error = y - y_hat;

    const auto p_phi = (state.inverse_correlation * phi).eval();
    const Scalar denom = state.forgetting + phi.dot(p_phi);
    const auto gain = (p_phi / denom).eval();
    state.weights += gain * error;
    state.inverse_correlation =
        (state.inverse_correlation - gain * p_phi.transpose()) / state.forgetting;
    state.inverse_correlation =
        ((state.inverse_correlation + state.inverse_correlation.transpose()) / 2).eval();

    if (!state.weights.allFinite() || !state.inverse_correlation.allFinite()) {
        state.diverged = true;
        return;
    }
    state.last_prediction = y_hat;
    state.buffer.push(u, y, error);
    state.output_stats.push(y);
    ++state.step_index;
}

template <typename Scalar = double>
struct IlsModel {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
    int n_refinements_run = 0;
    std::vector<Scalar> residual_history;  // residual RMS per solve
    bool diverged = false;
    bool rank_deficient = false;  // final solve used minimum-norm least squares
};

template <typename Scalar = double>
struct IlsOptions {
    int n_refinements = 10;
    Scalar weight_tolerance = Scalar(1e-9);
    Scalar divergence_threshold_factor = Scalar(1e4);
};

namespace detail {

/// Regressor matrix built by streaming the buffer over the training data,
/// with the error history fed from `errors` (zeros on the first pass).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> build_regressor_matrix(
    const BasisSpec& spec, std::span<const Scalar> inputs,
    std::span<const Scalar> outputs, std::span<const Scalar> errors) {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix(n, spec.dimension());
    RegressorBuffer<Scalar> buffer(spec.config());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row(spec.dimension());
    for (Eigen::Index k = 0; k < n; ++k) {
        expand_into(spec, inputs[static_cast<std::size_t>(k)], buffer, row);
        matrix.row(k) = row.transpose();
        buffer.push(inputs[static_cast<std::size_t>(k)],
                    outputs[static_cast<std::size_t>(k)],
                    errors[static_cast<std::size_t>(k)]);
    }
    return matrix;
}

}  // namespace detail

/// Offline extended least squares: solve with zeroed error regressors, then
/// refine by rebuilding the regressors from the one-step residuals of the
/// current weights. Rank-deficient systems are solved minimum-norm and
/// flagged; diverging residuals stop the refinement and flag the model.
template <typename Scalar>
IlsModel<Scalar> ils_fit(std::span<const Scalar> inputs, std::span<const Scalar> outputs,
                         const BasisSpec& spec, const IlsOptions<Scalar>& options = {}) {
    if (inputs.size() != outputs.size()) {
        throw ContractViolation("ils_fit: inputs/outputs length mismatch");
    }
    if (inputs.empty()) {
        throw ContractViolation("ils_fit: empty training data");
    }
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const auto n = static_cast<Eigen::Index>(inputs.size());
    Eigen::Map<const Vector> y(outputs.data(), n);

    RunningStats<Scalar> stats;
    for (Scalar v : outputs) stats.push(v);
    const Scalar threshold =
        options.divergence_threshold_factor * std::max(Scalar(1), stats.stddev());

    IlsModel<Scalar> model;
    std::vector<Scalar> errors(inputs.size(), Scalar(0));
    Vector weights = Vector::Zero(spec.dimension());

    for (int pass = 0; pass <= options.n_refinements; ++pass) {
        const Matrix regressors =
            detail::build_regressor_matrix(spec, inputs, outputs, errors);
        Eigen::BDCSVD<Matrix> svd(regressors,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector solved = svd.solve(y);
        if (!solved.allFinite()) {
            model.diverged = true;
            break;
        }
        const Vector residuals = y - regressors * solved;
        const Scalar residual_rms = std::sqrt(residuals.squaredNorm() / Scalar(n));
        model.residual_history.push_back(residual_rms);
        model.rank_deficient = svd.rank() < spec.dimension();

        const Scalar change = (solved - weights).template lpNorm<Eigen::Infinity>();
        weights = solved;
        model.n_refinements_run = pass;
        if (!std::isfinite(residual_rms) || residuals.template lpNorm<Eigen::Infinity>() > threshold) {
            model.diverged = true;
            break;
        }
        if (pass > 0 && change < options.weight_tolerance) break;
        for (Eigen::Index k = 0; k < n; ++k) {
            errors[static_cast<std::size_t>(k)] = residuals[k];
        }
    }

    model.weights = std::move(weights);
    return model;
}

/// Shared point-prediction path for both baselines: w^T phi.
template <typename Scalar>
Scalar predict_point(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights,
                     const BasisSpec& spec, const RegressorBuffer<Scalar>& buffer,
                     Scalar u_next) {
    if (weights.size() != spec.dimension()) {
        throw ContractViolation("predict_point: weight/basis dimension mismatch");
    }
    return weights.dot(expand(spec, u_next, buffer));
}

}  // namespace narmax

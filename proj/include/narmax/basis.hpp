#pragma once

// Polynomial regressor machinery: monomial enumeration over the delayed
// signal variables (u_k, u_{k-1..M1}, y_{k-1..M2}, e_{k-1..M3}), the rolling
// delay buffer, and evaluation of the regressor vector phi.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "narmax/errors.hpp"

namespace narmax {

struct NarmaxConfig {
    int input_delays = 1;   // M1
    int output_delays = 1;  // M2
    int error_delays = 1;   // M3
    int degree = 1;         // d
    bool include_constant = true;
    bool error_cross_terms = false;

    int n_variables() const { return 1 + input_delays + output_delays + error_delays; }

    void validate() const {
        if (input_delays < 0 || output_delays < 0 || error_delays < 0) {
            throw ContractViolation("NarmaxConfig: delays must be >= 0");
        }
        if (degree < 1) {
            throw ContractViolation("NarmaxConfig: degree must be >= 1");
        }
    }

    friend bool operator==(const NarmaxConfig&, const NarmaxConfig&) = default;
};

/// Ordered monomial exponent table. Variables are ordered
/// (u_k, u_{k-1}..u_{k-M1}, y_{k-1}..y_{k-M2}, e_{k-1}..e_{k-M3}); monomials
/// are sorted graded-lexicographically (total degree ascending, then
/// lexicographic on the exponent tuple) so coefficient vectors are
/// reproducible across runs.
class BasisSpec {
public:
    using Exponents = std::vector<int>;

    BasisSpec(NarmaxConfig config, std::vector<Exponents> exponents)
        : config_(config), exponents_(std::move(exponents)) {}

    Eigen::Index dimension() const {
        return static_cast<Eigen::Index>(exponents_.size());
    }
    int n_variables() const { return config_.n_variables(); }
    const NarmaxConfig& config() const { return config_; }
    const std::vector<Exponents>& exponents() const { return exponents_; }

    int total_degree(std::size_t i) const {
        int sum = 0;
        for (int e : exponents_[i]) sum += e;
        return sum;
    }

    std::optional<Eigen::Index> index_of(const Exponents& tuple) const {
        auto it = std::find(exponents_.begin(), exponents_.end(), tuple);
        if (it == exponents_.end()) return std::nullopt;
        return static_cast<Eigen::Index>(it - exponents_.begin());
    }

    /// Index of the degree-1 monomial in the given variable.
    std::optional<Eigen::Index> index_of_linear(int variable) const {
        Exponents tuple(static_cast<std::size_t>(n_variables()), 0);
        tuple[static_cast<std::size_t>(variable)] = 1;
        return index_of(tuple);
    }

    friend bool operator==(const BasisSpec&, const BasisSpec&) = default;

private:
    NarmaxConfig config_;
    std::vector<Exponents> exponents_;
};

/// Enumerate all monomials of total degree <= d over the config's variables,
/// subject to the error-purity rule: without error cross terms, a monomial
/// touching an error variable is a pure power of that single variable.
inline BasisSpec enumerate_monomials(const NarmaxConfig& config) {
    config.validate();
    const int n = config.n_variables();
    const int first_error = 1 + config.input_delays + config.output_delays;

    std::vector<BasisSpec::Exponents> table;
    BasisSpec::Exponents current(static_cast<std::size_t>(n), 0);

    const auto admissible = [&](const BasisSpec::Exponents& t) {
        int total = 0;
        for (int e : t) total += e;
        if (total == 0) return config.include_constant;
        if (!config.error_cross_terms) {
            int error_power = 0;
            for (int j = first_error; j < n; ++j) error_power += t[static_cast<std::size_t>(j)];
            if (error_power > 0 && error_power != total) return false;
            if (error_power > 0) {
                int touched = 0;
                for (int j = first_error; j < n; ++j) {
                    if (t[static_cast<std::size_t>(j)] > 0) ++touched;
                }
                if (touched > 1) return false;
            }
        }
        return true;
    };

    // Depth-first enumeration of exponent tuples with total degree <= d.
    const auto recurse = [&](auto&& self, int var, int remaining) -> void {
        if (var == n) {
            if (admissible(current)) table.push_back(current);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            current[static_cast<std::size_t>(var)] = e;
            self(self, var + 1, remaining - e);
        }
        current[static_cast<std::size_t>(var)] = 0;
    };
    recurse(recurse, 0, config.degree);

    std::sort(table.begin(), table.end(),
              [](const BasisSpec::Exponents& a, const BasisSpec::Exponents& b) {
                  int da = 0, db = 0;
                  for (int e : a) da += e;
                  for (int e : b) db += e;
                  if (da != db) return da < db;
                  return std::lexicographical_compare(a.begin(), a.end(), b.begin(),
                                                      b.end());
              });
    return BasisSpec(config, std::move(table));
}

/// Rolling histories of delayed inputs, outputs and prediction errors,
/// most-recent-first. Fixed length, zero-initialized; pushes shift.
template <typename Scalar = double>
class RegressorBuffer {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    RegressorBuffer(int input_delays, int output_delays, int error_delays)
        : u_hist_(Vector::Zero(input_delays)),
          y_hist_(Vector::Zero(output_delays)),
          e_hist_(Vector::Zero(error_delays)) {
        if (input_delays < 0 || output_delays < 0 || error_delays < 0) {
            throw ContractViolation("RegressorBuffer: delays must be >= 0");
        }
    }

    explicit RegressorBuffer(const NarmaxConfig& config)
        : RegressorBuffer(config.input_delays, config.output_delays,
                          config.error_delays) {}

    const Vector& u_history() const { return u_hist_; }
    const Vector& y_history() const { return y_hist_; }
    const Vector& e_history() const { return e_hist_; }

    void push(Scalar u, Scalar y, Scalar e) {
        if (!std::isfinite(u) || !std::isfinite(y) || !std::isfinite(e)) {
            throw NonFiniteSignal("RegressorBuffer::push: non-finite value");
        }
        shift(u_hist_, u);
        shift(y_hist_, y);
        shift(e_hist_, e);
    }

    void set_histories(Vector u, Vector y, Vector e) {
        if (u.size() != u_hist_.size() || y.size() != y_hist_.size() ||
            e.size() != e_hist_.size()) {
            throw ContractViolation("RegressorBuffer::set_histories: length mismatch");
        }
        u_hist_ = std::move(u);
        y_hist_ = std::move(y);
        e_hist_ = std::move(e);
    }

    friend bool operator==(const RegressorBuffer& a, const RegressorBuffer& b) {
        return a.u_hist_ == b.u_hist_ && a.y_hist_ == b.y_hist_ &&
               a.e_hist_ == b.e_hist_;
    }

private:
    static void shift(Vector& h, Scalar v) {
        for (Eigen::Index i = h.size() - 1; i > 0; --i) h[i] = h[i - 1];
        if (h.size() > 0) h[0] = v;
    }

    Vector u_hist_;
    Vector y_hist_;
    Vector e_hist_;
};

/// Evaluate the regressor vector phi into `out`: each entry is the product
/// of the signal variables raised to the monomial's exponents.
template <typename Scalar>
void expand_into(const BasisSpec& spec, Scalar u_now,
                 const RegressorBuffer<Scalar>& buffer,
                 Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> out) {
    const auto& u = buffer.u_history();
    const auto& y = buffer.y_history();
    const auto& e = buffer.e_history();
    const int n = spec.n_variables();
    if (1 + u.size() + y.size() + e.size() != n || out.size() != spec.dimension()) {
        throw ContractViolation("expand: spec and buffer dimensions inconsistent");
    }
    if (!std::isfinite(u_now) || !u.allFinite() || !y.allFinite() || !e.allFinite()) {
        throw NonFiniteSignal("expand: non-finite signal value");
    }

    const auto variable = [&](int j) -> Scalar {
        if (j == 0) return u_now;
        j -= 1;
        if (j < u.size()) return u[j];
        j -= static_cast<int>(u.size());
        if (j < y.size()) return y[j];
        j -= static_cast<int>(y.size());
        return e[j];
    };

    const auto& table = spec.exponents();
    for (std::size_t i = 0; i < table.size(); ++i) {
        Scalar prod = Scalar(1);
        for (int j = 0; j < n; ++j) {
            const int exp = table[i][static_cast<std::size_t>(j)];
            if (exp == 0) continue;
            const Scalar x = variable(j);
            Scalar p = x;
            for (int k = 1; k < exp; ++k) p *= x;
            prod *= p;
        }
        out[static_cast<Eigen::Index>(i)] = prod;
    }
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> expand(const BasisSpec& spec, Scalar u_now,
                                                const RegressorBuffer<Scalar>& buffer) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(spec.dimension());
    expand_into(spec, u_now, buffer, out);
    return out;
}

}  // namespace narmax

#pragma once

// Benchmark data generation: random-phase multisine excitation, the
// pseudo-random cubic NARMAX benchmark system, and stochastic simulation of
// that system with true noise fed back through the error history.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "narmax/basis.hpp"

namespace narmax {

struct MultisineSpec {
    int n_frequencies = 100;
    double f_low = 0.0;     // Hz; 0 means "start just above DC"
    double f_high = 100.0;  // Hz
    double sample_rate = 1000.0;
    double amplitude_norm = 1.0;  // target standard deviation
    std::uint64_t seed = 0;

    void validate() const;
};

/// Equally spaced tone grid for the spec. When f_low is zero the grid is
/// (f_low, f_high] in n steps so DC is excluded; otherwise it spans
/// [f_low, f_high] inclusive.
std::vector<double> multisine_frequencies(const MultisineSpec& spec);

namespace detail {
/// Sum of sinusoids sin(2 pi f t / fs + psi), no amplitude normalization.
std::vector<double> multisine_synth(std::span<const double> frequencies_hz,
                                    std::span<const double> phases,
                                    double sample_rate, std::size_t length);
}  // namespace detail

/// Random-phase multisine, rescaled so the empirical standard deviation
/// equals amplitude_norm.
std::vector<double> generate_multisine(const MultisineSpec& spec, std::size_t length);

struct SystemSpec {
    NarmaxConfig config;
    Eigen::VectorXd coefficients;  // aligned with enumerate_monomials(config)
    double noise_std = 0.02;
    std::uint64_t seed = 0;
};

struct SystemGenOptions {
    double uniform_half_width = 0.005;  // remaining coefficients ~ U(-w, w)
    double noise_std = 0.02;
    double butterworth_cutoff_hz = 100.0;
    double sample_rate_hz = 1000.0;
    double error_coefficient = 0.1;
};

struct ButterworthCoeffs {
    double b0;
    double b1;
    double a1;  // denominator coefficient; the y_{k-1} weight is -a1
};

/// First-order digital Butterworth low-pass via bilinear transform with
/// frequency prewarping.
ButterworthCoeffs butterworth_first_order(double cutoff_hz, double sample_rate_hz);

/// The benchmark system: degree-3 NARMAX with unit delays, Butterworth
/// coefficients on u_k, u_{k-1}, y_{k-1}, 0.1 on e_{k-1}, and small uniform
/// draws on every remaining monomial.
SystemSpec generate_system(std::uint64_t seed, const SystemGenOptions& options = {});

struct SystemSimulation {
    std::vector<double> outputs;
    std::vector<double> noises;
    bool diverged = false;
    std::optional<std::size_t> diverged_at;
};

/// Simulate the system over the inputs with fresh Gaussian noise; the error
/// history carries the true noise draws. A non-finite or absurdly large
/// output flags the draw as diverged and stops the run.
SystemSimulation simulate_system(const SystemSpec& system,
                                 std::span<const double> inputs, std::uint64_t seed);

}  // namespace narmax

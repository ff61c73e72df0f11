// Copyright 2026 The mqwidth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Phenomenological model of multiple-quantum coherence growth under a
// double-quantum pumping Hamiltonian and of the order-dependent decay that
// freezes the width of the MQ spectrum.
//
// Canonical units: time in microseconds, rates in 1/us, the decay constants
// A^2 and b^2 in 1/us^2. Values quoted in (1/ms)^2 go through per_us2().

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mqwidth/error.hpp"
#include "mqwidth/numerics.hpp"

namespace mqwidth::model {

/// (1/ms)^2 -> (1/us)^2.
constexpr double per_us2(double per_ms2) noexcept { return per_ms2 * 1e-6; }
/// (1/us)^2 -> (1/ms)^2.
constexpr double per_ms2(double per_us2) noexcept { return per_us2 * 1e6; }

namespace defaults {
inline constexpr double kGrowthRate = 0.0083;          // 1/us, Fig. 2 fit
inline constexpr double kOrderDecayMs2 = 200.0;       // (1/ms)^2
inline constexpr double kFig3SlopeMs2 = 205.48;       // (1/ms)^2
inline constexpr double kFig3InterceptMs2 = 23145.1;  // (1/ms)^2
inline constexpr double kFig3ClusterSize = 650.0;
// b^2 is not quoted directly; it follows from the Fig. 3 intercept K b^2 / 2.
inline constexpr double kClusterDecayMs2 = 2.0 * kFig3InterceptMs2 / kFig3ClusterSize;
inline constexpr double kSteadyStatePrefactor = 3.2;
}  // namespace defaults

/// Largest exponent accepted by cluster_size before exp() leaves double range.
inline constexpr double kMaxGrowthExponent = 700.0;

struct ModelParams {
    double a0 = defaults::kGrowthRate;                  ///< growth rate, 1/us
    double A2 = per_us2(defaults::kOrderDecayMs2);      ///< order decay A^2, 1/us^2
    double b2 = per_us2(defaults::kClusterDecayMs2);    ///< size decay b^2, 1/us^2
    double p = 0.0;                                     ///< perturbation strength
    double lambda = 2.0;                                ///< profile shape, 2 Gaussian, 1 exponential

    void validate() const {
        detail::require(std::isfinite(a0) && a0 > 0.0, "a0 must be > 0 (1/us)");
        detail::require(std::isfinite(A2) && A2 >= 0.0, "A2 must be >= 0 ((1/ms)^2)");
        detail::require(std::isfinite(b2) && b2 >= 0.0, "b2 must be >= 0 ((1/ms)^2)");
        detail::require(p >= 0.0 && p < 1.0, "p must satisfy 0 <= p < 1");
        detail::require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
    }
};

/// Reduced variables of the averaged decay: y = a_p T and m = |M| A p / a_p.
struct ReducedCoords {
    double y = 0.0;
    double m = 0.0;
};

struct CoherenceProfile {
    double prep_time = 0.0;  ///< us
    std::vector<int> orders;
    std::vector<double> intensities;
};

struct TrajectoryPoint {
    double y = 0.0;      ///< time in units of 1/a_p
    double k_eff = 0.0;  ///< effective cluster size, spins
};

struct ClusterTrajectory {
    std::vector<TrajectoryPoint> points;
};

/// Controls the evaluation of U2.
struct U2Options {
    /// Below this reduced order the defining integral is integrated directly.
    double small_m_threshold = 0.05;
    double quad_rel_tol = 1e-12;
};

// -- growth ------------------------------------------------------------------

/// a_p = a0 (1 - p). Derived for p << 1 and applied over the whole range.
inline double growth_exponent(const ModelParams& params) {
    params.validate();
    return params.a0 * (1.0 - params.p);
}

/// K = exp(a_p T).
inline double cluster_size(double a_p, double T) {
    detail::require(std::isfinite(T) && T >= 0.0, "cluster_size: T must be >= 0 (us)");
    detail::require(std::isfinite(a_p) && a_p >= 0.0, "cluster_size: a_p must be >= 0 (1/us)");
    const double exponent = a_p * T;
    if (exponent > kMaxGrowthExponent) {
        throw NumericalError("cluster_size: a_p*T = " + std::to_string(exponent) +
                             " overflows exp()");
    }
    return std::exp(exponent);
}

/// exp(-(M^2/K)^(lambda/2)). Accepts a continuous order so that it can be
/// used inside the effective-order equation.
inline double initial_profile(double order, double K, double lambda) {
    detail::require(K >= 1.0, "initial_profile: K must be >= 1");
    detail::require(lambda > 0.0, "initial_profile: lambda must be > 0");
    if (order == 0.0) return 1.0;
    return std::exp(-std::pow(order * order / K, 0.5 * lambda));
}

// -- decay in the two-stage experiment ------------------------------------------

inline double decay_separate(double order, double t, double K, const ModelParams& params) {
    detail::require(t >= 0.0, "decay_separate: t must be >= 0 (us)");
    return std::exp(-params.A2 * order * order * t * t) * std::exp(-K * params.b2 * t * t / 2.0);
}

inline double profile_separate(double order, double T, double t, const ModelParams& params) {
    detail::require(t >= 0.0, "profile_separate: t must be >= 0 (us)");
    const double K = cluster_size(growth_exponent(params), T);
    const double norm = 2.0 / std::sqrt(std::numbers::pi * K);
    return norm * std::exp(-order * order / K) * decay_separate(order, t, K, params);
}

/// 1 / (1/K + A^2 t^2): width-based cluster size after a free decay of length t.
inline double k_eff_separate(double K, double A2, double t) {
    detail::require(K >= 1.0, "k_eff_separate: K must be >= 1");
    detail::require(A2 >= 0.0, "k_eff_separate: A2 must be >= 0 (1/us^2)");
    detail::require(t >= 0.0, "k_eff_separate: t must be >= 0 (us)");
    return 1.0 / (1.0 / K + A2 * t * t);
}

/// Squared inverse decay time A^2 M^2 + K b^2 / 2 at which the two-stage
/// decay factor reaches 1/e.
inline double decoherence_rate_sq(double order, double K, const ModelParams& params) {
    detail::require(K >= 1.0, "decoherence_rate_sq: K must be >= 1");
    return params.A2 * order * order + K * params.b2 / 2.0;
}

// -- decay during simultaneous growth ---------------------------------------------

/// Normalized emergence time density (a_p / D) exp(a_p t), D = exp(a_p T) - 1.
inline double emergence_density(double t, double a_p, double T) {
    detail::require(a_p * T > 0.0, "emergence_density: a_p*T must be > 0");
    detail::require(t >= 0.0 && t <= T, "emergence_density: t must lie in [0, T]");
    return a_p * std::exp(a_p * t) / std::expm1(a_p * T);
}

/// U2(y, m) = integral over [0, y] of exp(-x - (m x)^2).
///
/// The closed form (sqrt(pi)/2m) exp(1/4m^2) [erf(ym + 1/2m) - erf(1/2m)] is
/// rewritten through erfcx with a = 1/2m, b = ym + a as
///   (sqrt(pi)/2m) [erfcx(a) - exp(-y - y^2 m^2) erfcx(b)],
/// which neither overflows nor cancels for large arguments.
inline double u2(double y, double m, const U2Options& opts = {}) {
    detail::require(y >= 0.0 && !std::isnan(y), "u2: y must be >= 0");
    detail::require(m >= 0.0 && std::isfinite(m), "u2: m must be >= 0 and finite");
    const double upper = std::isinf(y) ? 1.0 : -std::expm1(-y);
    if (y == 0.0) return 0.0;
    if (m == 0.0) return upper;

    double value = 0.0;
    if (m < opts.small_m_threshold) {
        // exp(-x) < 1e-26 beyond x = 60, far below any tolerance in use.
        const double cutoff = std::min(y, 60.0);
        numerics::QuadOptions q;
        q.rel_tol = opts.quad_rel_tol;
        const double m2 = m * m;
        value = numerics::quad_adaptive([m2](double x) { return std::exp(-x - m2 * x * x); },
                                        0.0, cutoff, q);
    } else {
        const double a = 0.5 / m;
        const double lower_term = numerics::erfc_scaled(a);
        double upper_term = 0.0;
        if (std::isfinite(y)) {
            const double b = y * m + a;
            upper_term = std::exp(-y - y * y * m * m) * numerics::erfc_scaled(b);
        }
        value = std::sqrt(std::numbers::pi) / (2.0 * m) * (lower_term - upper_term);
    }
    return std::clamp(value, 0.0, upper);
}

/// U2(y, m) / (1 - e^{-y}): the decay factor averaged over emergence times.
inline double averaged_decay(double y, double m, const U2Options& opts = {}) {
    detail::require(y > 0.0, "averaged_decay: y must be > 0");
    const double denom = std::isinf(y) ? 1.0 : -std::expm1(-y);
    return u2(y, m, opts) / denom;
}

/// A p / a_p, the factor turning a coherence order into the reduced order m.
inline double decay_ratio(const ModelParams& params) {
    const double a_p = growth_exponent(params);
    return std::sqrt(params.A2) * params.p / a_p;
}

inline ReducedCoords reduce(double order, double T, const ModelParams& params) {
    const double a_p = growth_exponent(params);
    return {a_p * T, std::abs(order) * std::sqrt(params.A2) * params.p / a_p};
}

/// MQ intensity at order M after preparation time T: initial profile with
/// K = exp(a_p T) times the averaged decay. Normalized to 1 at M = 0.
inline double spectrum(double order, double T, const ModelParams& params,
                       const U2Options& opts = {}) {
    detail::require(T > 0.0, "spectrum: T must be > 0 (us)");
    const double a_p = growth_exponent(params);
    const double K = cluster_size(a_p, T);
    const auto rc = reduce(order, T, params);
    return initial_profile(order, K, params.lambda) * averaged_decay(rc.y, rc.m, opts);
}

/// Intensities at the even orders -max_order..max_order.
inline CoherenceProfile coherence_profile(double T, int max_order, const ModelParams& params,
                                          const U2Options& opts = {}) {
    detail::require(max_order >= 0, "coherence_profile: max_order must be >= 0");
    CoherenceProfile out;
    out.prep_time = T;
    const int top = max_order - (max_order % 2);
    for (int M = -top; M <= top; M += 2) {
        out.orders.push_back(M);
        out.intensities.push_back(spectrum(M, T, params, opts));
    }
    return out;
}

// -- effective order and steady state ----------------------------------------------

/// Left-hand side of the effective-order equation with K = e^y and m = M r:
///   exp(-(M^2/K)^(lambda/2)) * U2(y, M r) / (1 - e^{-y}).
inline double effective_order_lhs(double order, double y, double r, double lambda,
                                  const U2Options& opts = {}) {
    if (order == 0.0) return 1.0;
    const double profile = std::exp(-std::exp(lambda * (std::log(order) - 0.5 * y)));
    return profile * averaged_decay(y, order * r, opts);
}

/// Largest y accepted by the effective-order solver (e^{y/2} stays finite).
inline constexpr double kMaxReducedTime = 1400.0;

/// M_e solving exp(-(M_e^2/K)^(lambda/2)) U2(y, M_e r)/(1 - e^{-y}) = 1/e.
///
/// The left side is 1 at M_e = 0 and strictly decreasing, and the undamped
/// root e^{y/2} bounds the damped one from above, so [0, e^{y/2}] always
/// brackets it.
inline double solve_effective_order(double y, double r, double lambda,
                                    const U2Options& opts = {}) {
    detail::require(std::isfinite(y) && y > 0.0, "solve_effective_order: y must be > 0");
    detail::require(y <= kMaxReducedTime, "solve_effective_order: y must be <= 1400");
    detail::require(std::isfinite(r) && r >= 0.0, "solve_effective_order: r must be >= 0");
    detail::require(std::isfinite(lambda) && lambda > 0.0,
                    "solve_effective_order: lambda must be > 0");
    const double undamped = std::exp(0.5 * y);
    if (r == 0.0) return undamped;

    const double target = std::exp(-1.0);
    auto f = [&](double order) { return effective_order_lhs(order, y, r, lambda, opts) - target; };
    const double f_hi = f(undamped);
    // Mathematically f_hi <= 0; allow a few ulps of rounding when r is tiny.
    if (f_hi > 0.0 && f_hi <= 8.0 * std::numeric_limits<double>::epsilon()) return undamped;
    if (f_hi > 0.0) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "solve_effective_order: no sign change on [0, e^{y/2}] (y = " << y << ", r = " << r
            << ", lambda = " << lambda << ", LHS(e^{y/2}) - 1/e = " << f_hi << ")";
        throw NumericalError(msg.str());
    }
    if (f_hi == 0.0) return undamped;

    const double coarse_tol = 1e-6 * undamped;
    const double coarse = numerics::find_root_monotone(f, {0.0, undamped}, coarse_tol);
    const numerics::Interval refined{std::max(0.0, coarse - coarse_tol),
                                     std::min(undamped, coarse + coarse_tol)};
    const double fine_tol = 1e-13 * std::max(coarse, 1e-300);
    return numerics::find_root_monotone(f, refined, fine_tol);
}

/// Two-term expansion of M_e for y << 1:
///   e^{y/2} (1 - (y r e^{y/2})^2 / (3 lambda)).
inline double small_y_effective_order(double y, double r, double lambda) {
    detail::require(lambda > 0.0, "small_y_effective_order: lambda must be > 0");
    const double grow = std::exp(0.5 * y);
    const double x = y * r * grow;
    return grow * (1.0 - x * x / (3.0 * lambda));
}

/// Reduced order m_e with U2(infinity, m_e) = 1/e.
inline double steady_state_order() {
    auto f = [](double m) {
        return std::sqrt(std::numbers::pi) / (2.0 * m) * numerics::erfc_scaled(0.5 / m) -
               std::exp(-1.0);
    };
    return numerics::find_root_monotone(f, {0.1, 10.0}, 1e-15);
}

/// m_e^2 for the y -> infinity limit of the effective-order equation; the
/// coefficient of a_p^2 / (A^2 p^2) in the plateau size.
inline double steady_state_constant() {
    const double m = steady_state_order();
    return m * m;
}

/// K_st = 3.2 a_p^2 / (A^2 p^2) for an explicit growth exponent.
inline double steady_state_size(double a_p, double A2, double p) {
    if (!(p > 0.0) || !(A2 > 0.0)) {
        throw ValidationError("steady_state_size: need p > 0 and A2 > 0 (no plateau otherwise)");
    }
    return defaults::kSteadyStatePrefactor * a_p * a_p / (A2 * p * p);
}

inline double steady_state_size(const ModelParams& params) {
    return steady_state_size(growth_exponent(params), params.A2, params.p);
}

/// K_eff(y) = M_e(y)^2 on a strictly increasing positive grid of reduced times.
inline ClusterTrajectory k_eff_trajectory(const ModelParams& params,
                                          const std::vector<double>& y_grid,
                                          const U2Options& opts = {}) {
    params.validate();
    for (std::size_t i = 0; i < y_grid.size(); ++i) {
        detail::require(y_grid[i] > 0.0, "k_eff_trajectory: y values must be > 0");
        if (i > 0) {
            detail::require(y_grid[i] > y_grid[i - 1],
                            "k_eff_trajectory: y grid must be strictly increasing");
        }
    }
    const double r = decay_ratio(params);
    ClusterTrajectory out;
    out.points.reserve(y_grid.size());
    for (double y : y_grid) {
        const double me = solve_effective_order(y, r, params.lambda, opts);
        out.points.push_back({y, me * me});
    }
    return out;
}

}  // namespace mqwidth::model

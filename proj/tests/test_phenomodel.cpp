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

#include <cmath>
#include <numbers>
#include <vector>

#include <catch_amalgamated.hpp>

#include "mqwidth/numerics.hpp"
#include "mqwidth/phenomodel.hpp"

using namespace mqwidth;
using namespace mqwidth::model;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams paper(double p = 0.0, double lambda = 2.0) {
    ModelParams m;
    m.p = p;
    m.lambda = lambda;
    return m;
}

// Defining integral of U2, integrated without the closed form.
double u2_by_quadrature(double y, double m) {
    numerics::QuadOptions q;
    q.rel_tol = 1e-12;
    return numerics::quad_adaptive([m](double x) { return std::exp(-x - m * m * x * x); }, 0.0,
                                   y, q);
}

// Effective-order equation from the erf closed form, with the erf
// difference taken as erfc(a) - erfc(b). Only the crossing needs to be
// accurate; for m <= 0.05 the decay factor is set to 1, which keeps the sign
// of (LHS - 1/e) right there because the crossing sits at much larger m.
double lhs_oracle(double M, double y, double r, double lambda) {
    const double m = M * r;
    double decay = 1.0;
    if (m > 0.05) {
        const double a = 1.0 / (2 * m);
        decay = std::sqrt(std::numbers::pi) / (2 * m) * std::exp(a * a) *
                (std::erfc(a) - std::erfc(y * m + a)) / (1 - std::exp(-y));
    }
    return std::exp(-std::pow(M * M / std::exp(y), lambda / 2)) * decay;
}

// Crossing of 1/e found by scanning `points` equally spaced orders.
double grid_scan_root(double y, double r, double lambda, int points) {
    const double hi = std::exp(y / 2);
    const double target = std::exp(-1.0);
    double prev_m = 0.0;
    double prev_v = 1.0 - target;
    for (int i = 1; i <= points; ++i) {
        const double M = hi * i / points;
        const double v = lhs_oracle(M, y, r, lambda) - target;
        if (v <= 0.0) return prev_m + (M - prev_m) * prev_v / (prev_v - v);
        prev_m = M;
        prev_v = v;
    }
    return hi;
}

}  // namespace

TEST_CASE("growth_exponent and cluster_size") {
    CHECK(growth_exponent(paper(0.0)) == 0.0083);
    CHECK_THAT(growth_exponent(paper(0.5)), WithinRel(0.00415, 1e-15));
    ModelParams unit;
    unit.a0 = 1.0;
    unit.p = 1.0 - 1e-12;
    CHECK(growth_exponent(unit) < 1e-11);

    CHECK(cluster_size(0.3, 0.0) == 1.0);
    CHECK_THAT(cluster_size(0.0083, 660.0), WithinAbs(239.36749333328571928, 1e-9));
    CHECK_THAT(cluster_size(std::log(650.0), 1.0), WithinRel(650.0, 1e-14));
    CHECK_THROWS_AS(cluster_size(1.0, 701.0), NumericalError);
    CHECK_THROWS_AS(cluster_size(1.0, -1.0), ValidationError);
}

TEST_CASE("ModelParams validation") {
    auto bad = paper();
    bad.p = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = paper();
    bad.a0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = paper();
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THAT(per_us2(200.0), WithinRel(2e-4, 1e-15));
}

TEST_CASE("initial_profile") {
    CHECK(initial_profile(0, 123.0, 1.3) == 1.0);
    for (double lam : {0.5, 1.0, 2.0, 3.0}) {
        CHECK_THAT(initial_profile(10, 100.0, lam), WithinRel(std::exp(-1.0), 1e-15));
    }
    CHECK_THAT(initial_profile(4, 100.0, 2.0), WithinRel(std::exp(-0.16), 1e-15));
    CHECK_THAT(initial_profile(4, 100.0, 1.0), WithinRel(std::exp(-0.4), 1e-15));
}

TEST_CASE("two-stage decay and profile") {
    const auto params = paper();
    CHECK(decay_separate(6, 0.0, 650.0, params) == 1.0);
    ModelParams none = params;
    none.A2 = 0.0;
    none.b2 = 0.0;
    CHECK(decay_separate(8, 123.0, 650.0, none) == 1.0);

    // M = 0 channel reaches 1/e at t = 1/sqrt(K b^2 / 2) = 1/sqrt(23145.1) ms.
    const double t = 1000.0 / std::sqrt(23145.1);
    CHECK_THAT(decay_separate(0, t, 650.0, params), WithinRel(std::exp(-1.0), 1e-12));

    const double K = cluster_size(0.0083, 660.0);
    CHECK_THAT(profile_separate(0, 660.0, 0.0, params),
               WithinRel(2.0 / std::sqrt(std::numbers::pi * K), 1e-14));
    CHECK_THAT(profile_separate(15, 660.0, 0.0, params),
               WithinRel(2.0 / std::sqrt(std::numbers::pi * 239.36749333328571928) *
                             std::exp(-225.0 / 239.36749333328571928),
                         1e-12));
    const double td = 20.0;
    const double ratio = profile_separate(6, 660.0, td, params) / profile_separate(0, 660.0, td, params);
    CHECK_THAT(ratio, WithinRel(std::exp(-36.0 / K - params.A2 * 36.0 * td * td), 1e-12));
}

TEST_CASE("k_eff_separate") {
    const double K = 650.0;
    const double A2 = per_us2(200.0);
    CHECK(k_eff_separate(K, A2, 0.0) == K);
    const double half_t = std::sqrt(1.0 / (K * A2));
    CHECK_THAT(k_eff_separate(K, A2, half_t), WithinRel(K / 2, 1e-14));
    CHECK_THAT(k_eff_separate(K, A2, 1e6), WithinRel(1.0 / (A2 * 1e12), 1e-3));
    double prev = K;
    for (int i = 1; i <= 100; ++i) {
        const double v = k_eff_separate(K, A2, i * 2.0);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
}

TEST_CASE("emergence_density") {
    const double a_p = 0.0074;
    const double T = 1000.0;
    const double total = numerics::quad_adaptive(
        [&](double t) { return emergence_density(t, a_p, T); }, 0.0, T);
    CHECK_THAT(total, WithinRel(1.0, 1e-11));
    CHECK_THAT(emergence_density(T, a_p, T) / emergence_density(0.0, a_p, T),
               WithinRel(std::exp(a_p * T), 1e-12));
    CHECK_THAT(emergence_density(0.0, 0.01, std::log(2.0) / 0.01), WithinRel(0.01, 1e-14));
    CHECK_THROWS_AS(emergence_density(0.0, 0.01, 0.0), ValidationError);
}

TEST_CASE("u2: limits and anchor values") {
    for (double y : {0.1, 1.0, 10.0}) CHECK_THAT(u2(y, 0.0), WithinRel(-std::expm1(-y), 1e-15));
    for (double m : {0.0, 0.01, 1.0}) CHECK(u2(0.0, m) == 0.0);
    // mpmath quadrature of the defining integral, 25 digits
    CHECK_THAT(u2(4.0, 0.5), WithinRel(0.7577657234840565665924667, 1e-12));
    CHECK_THAT(u2(10.0, 1.0), WithinRel(0.5456413607650470420993878, 1e-12));
    CHECK_THAT(u2(1.0, 0.01), WithinRel(0.6321044989883150300969673, 1e-11));
    CHECK_THAT(u2(30.0, 0.1), WithinRel(0.9810943073153879052877642, 1e-12));
    CHECK_THAT(u2(4.0, 0.5), WithinRel(u2_by_quadrature(4.0, 0.5), 1e-12));
}

TEST_CASE("u2: closed form matches quadrature over the parameter grid") {
    U2Options closed;
    closed.small_m_threshold = 0.0;  // closed form everywhere
    for (double y : {0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 50.0}) {
        for (double m : {1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
            const double q = u2_by_quadrature(y, m);
            INFO("y = " << y << ", m = " << m);
            CHECK(std::abs(u2(y, m) / q - 1.0) <= 1e-8);
            CHECK(std::abs(u2(y, m, closed) / q - 1.0) <= 1e-8);
        }
    }
}

TEST_CASE("u2: bounded by 1 - e^-y") {
    for (double y : {0.01, 0.3, 2.0, 7.0, 40.0}) {
        for (double m = 0.0; m <= 20.0; m += 0.37) {
            const double v = u2(y, m);
            CHECK(v >= 0.0);
            CHECK(v <= -std::expm1(-y));
        }
    }
}

TEST_CASE("averaged_decay: 1 at m = 0, strictly decreasing, vanishing for large m") {
    for (double y : {0.05, 1.0, 10.0, 30.0}) {
        CHECK_THAT(averaged_decay(y, 0.0), WithinAbs(1.0, 1e-12));
        double prev = 1.0;
        for (int i = 1; i <= 400; ++i) {
            const double m = 0.025 * i;
            const double v = averaged_decay(y, m);
            INFO("y = " << y << ", m = " << m);
            CHECK(v < prev);
            prev = v;
        }
        CHECK(averaged_decay(y, 1e9) < 1e-6);
    }
    CHECK_THAT(averaged_decay(10.0, 1.0),
               WithinRel(0.5456413607650470420993878 / (1 - std::exp(-10.0)), 1e-12));
    CHECK_THROWS_AS(averaged_decay(0.0, 1.0), ValidationError);
}

TEST_CASE("spectrum") {
    const double T = 10.0 / growth_exponent(paper(0.1));
    CHECK_THAT(spectrum(0, T, paper(0.1)), WithinAbs(1.0, 1e-14));
    for (int M : {2, 6, 20}) {
        const double K = cluster_size(0.0083, 900.0);
        CHECK_THAT(spectrum(M, 900.0, paper(0.0)), WithinRel(initial_profile(M, K, 2.0), 1e-14));
    }
    // composed from the component oracles at y = 10, M = 10
    const auto params = paper(0.1);
    const double a_p = 0.0083 * 0.9;
    const double r = std::sqrt(2e-4) * 0.1 / a_p;
    const double expected = std::exp(-100.0 / std::exp(10.0)) * lhs_oracle(10.0, 10.0, r, 2.0) /
                            std::exp(-100.0 / std::exp(10.0));
    CHECK_THAT(spectrum(10, 10.0 / a_p, params), WithinRel(expected, 1e-10));
    for (int M = -30; M <= 30; M += 2) {
        const double v = spectrum(M, T, params);
        CHECK(v > 0.0);
        CHECK(v == spectrum(-M, T, params));
    }
    const auto profile = coherence_profile(T, 20, params);
    REQUIRE(profile.orders.size() == 21);
    CHECK(profile.orders.front() == -20);
    CHECK(profile.intensities[10] == 1.0);
}

TEST_CASE("solve_effective_order: undamped case is sqrt(K)") {
    for (double y : {0.1, 2.0, 10.0}) {
        for (double lam : {1.0, 2.0}) CHECK(solve_effective_order(y, 0.0, lam) == std::exp(y / 2));
    }
}

TEST_CASE("solve_effective_order: matches a 1e6-point grid scan") {
    const double root = solve_effective_order(10.0, 0.1, 2.0);
    const double scan = grid_scan_root(10.0, 0.1, 2.0, 1'000'000);
    CHECK_THAT(root, WithinRel(scan, 1e-6));
}

TEST_CASE("solve_effective_order: plug-back residual and monotone LHS") {
    for (double y : {0.05, 1.0, 5.0, 10.0, 30.0}) {
        for (double r : {0.01, 0.1, 0.5, 2.0}) {
            for (double lam : {1.0, 2.0}) {
                const double me = solve_effective_order(y, r, lam);
                INFO("y = " << y << ", r = " << r << ", lambda = " << lam);
                CHECK(std::abs(effective_order_lhs(me, y, r, lam) - std::exp(-1.0)) <= 1e-8);
                CHECK(me <= std::exp(y / 2));
            }
        }
    }
    const double y = 10.0, r = 0.1;
    double prev = effective_order_lhs(0.0, y, r, 2.0);
    CHECK(prev == 1.0);
    for (int i = 1; i <= 2000; ++i) {
        const double M = std::exp(y / 2) * i / 2000.0;
        const double v = effective_order_lhs(M, y, r, 2.0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("solve_effective_order: argument validation") {
    CHECK_THROWS_AS(solve_effective_order(0.0, 0.1, 2.0), ValidationError);
    CHECK_THROWS_AS(solve_effective_order(1.0, -0.1, 2.0), ValidationError);
    CHECK_THROWS_AS(solve_effective_order(1.0, 0.1, 0.0), ValidationError);
}

TEST_CASE("small_y_effective_order") {
    CHECK(small_y_effective_order(0.3, 0.0, 2.0) == std::exp(0.15));
    CHECK_THAT(small_y_effective_order(1e-9, 0.5, 2.0), WithinAbs(1.0, 1e-8));
    const double g = std::exp(0.025);
    const double c1 = g - small_y_effective_order(0.05, 0.01, 1.0);
    const double c2 = g - small_y_effective_order(0.05, 0.01, 2.0);
    CHECK_THAT(c1, WithinRel(2 * c2, 1e-6));
    const double exact = solve_effective_order(0.05, 0.01, 2.0);
    CHECK_THAT(small_y_effective_order(0.05, 0.01, 2.0), WithinRel(exact, 0.01));
}

TEST_CASE("steady state constant") {
    const double c = steady_state_constant();
    CHECK(c >= 2.9);
    CHECK(c <= 3.5);
    CHECK_THAT(c, WithinRel(3.274840551114827210227686, 1e-10));  // mpmath root
    const double m = std::sqrt(c);
    const double a = 1 / (2 * m);
    const double residual = std::sqrt(std::numbers::pi) / (2 * m) * std::exp(a * a) *
                                (1 - std::erf(a)) - std::exp(-1.0);
    CHECK(std::abs(residual) <= 1e-10);

    // crossing of 1/e by U2 at y = 500, scanned on a fine m grid
    double crossing = 0.0;
    double prev = u2(500.0, 1.0) - std::exp(-1.0);
    for (int i = 1; i <= 100000; ++i) {
        const double mm = 1.0 + 2.0 * i / 100000;
        const double v = u2_by_quadrature(500.0, mm) - std::exp(-1.0);
        if (v <= 0.0) {
            crossing = mm - 2.0 / 100000 * v / (v - prev);
            break;
        }
        prev = v;
    }
    CHECK_THAT(crossing * crossing, WithinRel(c, 1e-6));
}

TEST_CASE("steady_state_size") {
    const double a_p = 0.0083 * 0.9;
    CHECK_THAT(steady_state_size(paper(0.1)), WithinRel(3.2 * a_p * a_p / (2e-4 * 0.01), 1e-14));
    CHECK_THAT(steady_state_size(paper(0.1)), WithinAbs(89.3, 0.05));
    CHECK_THAT(steady_state_size(0.01, 2e-4, 0.2), WithinRel(steady_state_size(0.01, 2e-4, 0.1) / 4, 1e-14));
    CHECK_THROWS_AS(steady_state_size(paper(0.0)), ValidationError);
    auto no_decay = paper(0.1);
    no_decay.A2 = 0.0;
    CHECK_THROWS_AS(steady_state_size(no_decay), ValidationError);
    // consistent with the y -> infinity root m_e^2 / r^2
    const auto params = paper(0.1);
    const double r = decay_ratio(params);
    CHECK_THAT(steady_state_constant() / (r * r),
               WithinRel(steady_state_size(params) * steady_state_constant() / 3.2, 1e-12));
}

TEST_CASE("decoherence_rate_sq reproduces the Fig. 3 line") {
    auto params = paper();
    params.A2 = per_us2(205.48);
    params.b2 = per_us2(2 * 23145.1 / 650);
    CHECK_THAT(per_ms2(decoherence_rate_sq(0, 650.0, params)), WithinRel(23145.1, 1e-12));
    CHECK_THAT(per_ms2(decoherence_rate_sq(10, 650.0, params)),
               WithinRel(205.48 * 100 + 23145.1, 1e-12));
    const double slope = per_ms2(decoherence_rate_sq(3, 650.0, params) -
                                 decoherence_rate_sq(2, 650.0, params)) / 5.0;
    CHECK_THAT(slope, WithinRel(205.48, 1e-10));
}

TEST_CASE("k_eff_trajectory") {
    ModelParams tiny = paper(1e-14);
    const auto pure = k_eff_trajectory(tiny, {0.5, 1.0, 5.0, 10.0});
    for (const auto& pt : pure.points) CHECK_THAT(pt.k_eff, WithinRel(std::exp(pt.y), 1e-9));

    const auto p02 = paper(0.2);
    const auto tail = k_eff_trajectory(p02, {20.0, 25.0, 30.0});
    const double plateau = steady_state_constant() / std::pow(decay_ratio(p02), 2);
    for (const auto& pt : tail.points) CHECK_THAT(pt.k_eff, WithinRel(plateau, 0.01));
    CHECK_THAT(tail.points.back().k_eff, WithinRel(steady_state_size(p02), 0.05));

    const auto gauss = k_eff_trajectory(paper(0.1, 2.0), {1.0, 30.0});
    const auto expo = k_eff_trajectory(paper(0.1, 1.0), {1.0, 30.0});
    CHECK(std::abs(gauss.points[0].k_eff / expo.points[0].k_eff - 1.0) > 0.01);
    CHECK_THAT(gauss.points[1].k_eff, WithinRel(expo.points[1].k_eff, 0.02));

    CHECK_THROWS_AS(k_eff_trajectory(p02, {1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(k_eff_trajectory(p02, {0.0, 1.0}), ValidationError);
}

TEST_CASE("plateau follows m_e^2 a_p^2 / (A^2 p^2)") {
    const double c = steady_state_constant();
    for (double p : {0.05, 0.1, 0.2, 0.5}) {
        const auto params = paper(p);
        const double r = decay_ratio(params);
        const double me = solve_effective_order(30.0, r, 2.0);
        INFO("p = " << p);
        CHECK_THAT(me * me, WithinRel(c / (r * r), 0.05));
        CHECK_THAT(me * me, WithinRel(steady_state_size(params), 0.12));
    }
}

TEST_CASE("inverse-square law with a_p held fixed") {
    std::vector<numerics::Point2> eq19;
    std::vector<numerics::Point2> solved;
    const double a_p = 0.0083;
    for (double p : {0.05, 0.1, 0.2, 0.3, 0.5}) {
        eq19.push_back({std::log(p), std::log(steady_state_size(a_p, 2e-4, p))});
        const double r = std::sqrt(2e-4) * p / a_p;
        const double me = solve_effective_order(30.0, r, 2.0);
        solved.push_back({std::log(p), std::log(me * me)});
    }
    CHECK_THAT(numerics::fit_line(eq19).slope, WithinAbs(-2.0, 1e-12));
    CHECK_THAT(numerics::fit_line(solved).slope, WithinAbs(-2.0, 0.05));
}

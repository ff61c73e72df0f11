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

// Special functions, quadrature, bracketed root finding and least squares.
// Everything here is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mqwidth/error.hpp"

namespace mqwidth::numerics {

/// Closed interval [lo, hi] with lo < hi.
class Interval {
public:
    Interval(double lo, double hi) : lo_(lo), hi_(hi) {
        mqwidth::detail::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
                        "Interval: need finite lo < hi");
    }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double width() const noexcept { return hi_ - lo_; }

private:
    double lo_;
    double hi_;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Error function. The platform implementation is within an ulp or two of the
/// exact value on the whole real line, well inside the 1e-14 budget.
inline double erf(double x) noexcept { return std::erf(x); }

/// exp(x^2) * erfc(x) for x >= 0, finite for every finite x.
///
/// Below x = 10 the product is formed directly with the square split into a
/// high and a low part so that exp(x^2) keeps full relative precision. Above
/// it, erfc underflows soon after, so the Laplace continued fraction
///   erfcx(x) = 1 / (sqrt(pi) * (x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...)))))
/// is evaluated backwards from a fixed depth.
inline double erfc_scaled(double x) {
    if (!(x >= 0.0)) {
        throw ValidationError("erfc_scaled: argument must be >= 0, got " + std::to_string(x));
    }
    if (std::isinf(x)) return 0.0;
    if (x < 10.0) {
        const double hi = x * x;
        const double lo = std::fma(x, x, -hi);
        return std::exp(hi) * std::erfc(x) * (1.0 + lo);
    }
    constexpr int kDepth = 64;
    double tail = x;
    for (int k = kDepth; k >= 1; --k) tail = x + (0.5 * k) / tail;
    return 1.0 / (std::sqrt(std::numbers::pi) * tail);
}

struct QuadOptions {
    double rel_tol = 1e-11;
    int max_depth = 60;
    std::size_t max_intervals = 20000;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK nodes).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    int depth;
    bool operator<(const Panel& other) const noexcept { return error < other.error; }
};

template <class F>
Panel gauss_kronrod(F& f, double a, double b, int depth) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double pair = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[i] * pair;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod)) {
        throw NumericalError("quad_adaptive: non-finite integrand on [" + std::to_string(a) +
                             ", " + std::to_string(b) + "]");
    }
    return {a, b, kronrod, std::abs(kronrod - gauss), depth};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate falls below rel_tol * |integral|. Running out of depth or panel
/// budget throws NumericalError rather than returning a doubtful value.
template <class F>
double quad_adaptive(F&& f, double a, double b, const QuadOptions& opts = {}) {
    mqwidth::detail::require(std::isfinite(a) && std::isfinite(b) && a <= b,
                             "quad_adaptive: need finite a <= b");
    mqwidth::detail::require(opts.rel_tol >= 1e-13, "quad_adaptive: rel_tol must be >= 1e-13");
    if (a == b) return 0.0;

    std::priority_queue<detail::Panel> panels;
    auto first = detail::gauss_kronrod(f, a, b, 0);
    double total = first.value;
    double error = first.error;
    panels.push(first);

    while (error > opts.rel_tol * std::abs(total)) {
        if (panels.size() >= opts.max_intervals) {
            throw NumericalError("quad_adaptive: panel budget exhausted (estimate " +
                                 std::to_string(total) + ", error " + std::to_string(error) +
                                 ")");
        }
        const detail::Panel worst = panels.top();
        if (worst.depth >= opts.max_depth) {
            throw NumericalError("quad_adaptive: maximum subdivision depth reached near x = " +
                                 std::to_string(worst.a));
        }
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gauss_kronrod(f, worst.a, mid, worst.depth + 1);
        auto right = detail::gauss_kronrod(f, mid, worst.b, worst.depth + 1);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }

    // Re-sum from the panels to shed the drift of the running updates.
    double sum = 0.0;
    while (!panels.empty()) {
        sum += panels.top().value;
        panels.pop();
    }
    return sum;
}

/// Root of a continuous, strictly monotone f inside a sign-changing bracket.
///
/// Regula falsi with the Illinois weighting; whenever a step fails to halve
/// the bracket the next step is a plain bisection, so the bracket width is
/// at least halved every two evaluations.
template <class F>
double find_root_monotone(F&& f, const Interval& bracket, double tol) {
    mqwidth::detail::require(tol > 0.0, "find_root_monotone: tol must be positive");
    double a = bracket.lo();
    double b = bracket.hi();
    double fa = f(a);
    double fb = f(b);
    if (std::isnan(fa) || std::isnan(fb)) {
        throw NumericalError("find_root_monotone: NaN at bracket endpoint");
    }
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (std::signbit(fa) == std::signbit(fb)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "find_root_monotone: no sign change, f(" << a << ") = " << fa << ", f(" << b
            << ") = " << fb;
        throw ValidationError(msg.str());
    }

    double previous_width = b - a;
    bool bisect = false;
    int retained = 0;  // -1 when a moved last, +1 when b moved last
    constexpr int kMaxEvaluations = 4000;
    for (int it = 0; it < kMaxEvaluations && b - a > tol; ++it) {
        double c = a + 0.5 * (b - a);
        if (!bisect) {
            const double falsi = (a * fb - b * fa) / (fb - fa);
            if (falsi > a && falsi < b) c = falsi;
        }
        if (!(c > a && c < b)) break;  // no representable interior point left
        const double fc = f(c);
        if (std::isnan(fc)) {
            throw NumericalError("find_root_monotone: NaN at x = " + std::to_string(c));
        }
        if (fc == 0.0) return c;
        if (std::signbit(fc) == std::signbit(fa)) {
            a = c;
            fa = fc;
            if (retained == -1) fb *= 0.5;
            retained = -1;
        } else {
            b = c;
            fb = fc;
            if (retained == +1) fa *= 0.5;
            retained = +1;
        }
        const double width = b - a;
        bisect = width > 0.5 * previous_width;
        previous_width = width;
    }
    return a + 0.5 * (b - a);
}

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(std::span<const Point2> points) {
    mqwidth::detail::require(points.size() >= 2, "fit_line: need at least two points");
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& p : points) {
        mqwidth::detail::require(std::isfinite(p.x) && std::isfinite(p.y),
                                 "fit_line: non-finite coordinate");
        mean_x += p.x;
        mean_y += p.y;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.x - mean_x;
        const double dy = p.y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double scale = std::max(std::abs(mean_x), 1.0);
    if (!(sxx > 1e-28 * n * scale * scale)) {
        throw ValidationError("fit_line: x values have no spread");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.y - (fit.slope * p.x + fit.intercept);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

inline LineFit fit_line(const std::vector<Point2>& points) {
    return fit_line(std::span<const Point2>(points));
}

}  // namespace mqwidth::numerics

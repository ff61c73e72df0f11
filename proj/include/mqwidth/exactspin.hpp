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

// Exact density-matrix dynamics of small spin-1/2 clusters under the secular
// dipolar Hamiltonian, the double-quantum pumping Hamiltonian and their
// convex mixture, with coherence-order analysis by block decomposition and
// by phase cycling.
//
// Basis: product states indexed by bitmask, bit i set <=> spin i up. The
// total magnetization of state s is popcount(s) - n/2. Sums over i != j run
// over ordered pairs, so every unordered pair appears twice.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mqwidth/error.hpp"

namespace mqwidth::spin {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

inline constexpr int kMinSpins = 2;
inline constexpr int kMaxSpins = 12;

enum class Topology { all_to_all, chain, table };

/// n spins-1/2 with a symmetric coupling table b_ij (1/us), zero diagonal.
class SpinSystem {
public:
    explicit SpinSystem(int n) : n_(n) {
        detail::require(n >= kMinSpins && n <= kMaxSpins,
                        "SpinSystem: n must be in [2, 12], got " + std::to_string(n));
        couplings_.assign(static_cast<std::size_t>(n * n), 0.0);
    }

    static SpinSystem all_to_all(int n, double b) {
        SpinSystem s(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s.set_coupling(i, j, b);
        return s;
    }

    static SpinSystem chain(int n, double b) {
        SpinSystem s(n);
        for (int i = 0; i + 1 < n; ++i) s.set_coupling(i, i + 1, b);
        return s;
    }

    int size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return std::size_t{1} << n_; }

    double coupling(int i, int j) const { return couplings_[index(i, j)]; }

    void set_coupling(int i, int j, double b) {
        detail::require(i != j, "SpinSystem: self-coupling b_ii must stay zero");
        detail::require(std::isfinite(b), "SpinSystem: coupling must be finite (1/us)");
        couplings_[index(i, j)] = b;
        couplings_[index(j, i)] = b;
    }

    /// Twice the total magnetization of basis state s (an integer).
    int twice_mz(std::size_t s) const noexcept {
        return 2 * std::popcount(static_cast<std::uint32_t>(s)) - n_;
    }

private:
    std::size_t index(int i, int j) const {
        detail::require(i >= 0 && i < n_ && j >= 0 && j < n_, "SpinSystem: spin index out of range");
        return static_cast<std::size_t>(i * n_ + j);
    }

    int n_;
    std::vector<double> couplings_;
};

/// Reads "i j b_ij" lines (0-based, 1/us); '#' starts a comment. With n <= 0
/// the system size is one past the largest index seen.
inline SpinSystem read_coupling_table(std::istream& in, int n = 0) {
    struct Entry {
        int i, j;
        double b;
    };
    std::vector<Entry> entries;
    std::string line;
    int line_no = 0;
    int largest = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        Entry e{};
        if (!(fields >> e.i)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw ValidationError("coupling table line " + std::to_string(line_no) +
                                  ": expected 'i j b_ij'");
        }
        std::string extra;
        if (!(fields >> e.j >> e.b) || (fields >> extra)) {
            throw ValidationError("coupling table line " + std::to_string(line_no) +
                                  ": expected 'i j b_ij'");
        }
        if (e.i < 0 || e.j < 0 || e.i == e.j) {
            throw ValidationError("coupling table line " + std::to_string(line_no) +
                                  ": indices must be distinct and >= 0");
        }
        largest = std::max({largest, e.i, e.j});
        entries.push_back(e);
    }
    const int size = n > 0 ? n : largest + 1;
    detail::require(largest < size, "coupling table: index beyond system size");
    SpinSystem system(size);
    for (const auto& e : entries) system.set_coupling(e.i, e.j, e.b);
    return system;
}

inline SpinSystem read_coupling_file(const std::string& path, int n = 0) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open coupling file '" + path + "'");
    return read_coupling_table(in, n);
}

// -- operators ------------------------------------------------------------------

/// Total S_z, diagonal.
inline OperatorMatrix total_sz(const SpinSystem& system) {
    const auto dim = static_cast<Eigen::Index>(system.dim());
    OperatorMatrix out = OperatorMatrix::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) out(s, s) = 0.5 * system.twice_mz(s);
    return out;
}

/// Tr(S_z^2) = n 2^n / 4.
inline double sz_norm(const SpinSystem& system) {
    return 0.25 * system.size() * static_cast<double>(system.dim());
}

/// Secular dipolar Hamiltonian
///   sum_{i!=j} b_ij S_zi S_zj - (1/2) sum_{i!=j} b_ij S_+i S_-j.
inline OperatorMatrix build_dipolar(const SpinSystem& system) {
    const int n = system.size();
    const auto dim = static_cast<Eigen::Index>(system.dim());
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) {
        const auto state = static_cast<std::uint32_t>(s);
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const bool up_i = (state >> i) & 1u;
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double b = system.coupling(i, j);
                if (b == 0.0) continue;
                const bool up_j = (state >> j) & 1u;
                diag += b * (up_i ? 0.5 : -0.5) * (up_j ? 0.5 : -0.5);
                // S_+i S_-j: i down -> up, j up -> down.
                if (!up_i && up_j) {
                    const auto target = (state | (1u << i)) & ~(1u << j);
                    h(static_cast<Eigen::Index>(target), s) += -0.5 * b;
                }
            }
        }
        h(s, s) += diag;
    }
    return h;
}

/// Double-quantum Hamiltonian -(1/4) sum_{i!=j} b_ij (S_+i S_+j + S_-i S_-j).
inline OperatorMatrix build_double_quantum(const SpinSystem& system) {
    const int n = system.size();
    const auto dim = static_cast<Eigen::Index>(system.dim());
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) {
        const auto state = static_cast<std::uint32_t>(s);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double b = system.coupling(i, j);
                if (b == 0.0) continue;
                const bool up_i = (state >> i) & 1u;
                const bool up_j = (state >> j) & 1u;
                const auto pair = (1u << i) | (1u << j);
                if (!up_i && !up_j) {
                    h(static_cast<Eigen::Index>(state | pair), s) += -0.25 * b;
                } else if (up_i && up_j) {
                    h(static_cast<Eigen::Index>(state & ~pair), s) += -0.25 * b;
                }
            }
        }
    }
    return h;
}

/// (1 - p) H_0 + p H_d.
inline OperatorMatrix build_effective(const SpinSystem& system, double p) {
    detail::require(p >= 0.0 && p <= 1.0, "build_effective: p must lie in [0, 1]");
    return (1.0 - p) * build_double_quantum(system) + p * build_dipolar(system);
}

inline double max_hermitian_deviation(const OperatorMatrix& h) {
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

// -- time evolution -------------------------------------------------------------

/// Eigendecomposition of a Hermitian operator, reused for any number of times.
class Propagator {
public:
    explicit Propagator(const OperatorMatrix& h) {
        Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(h);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("Propagator: Hermitian eigendecomposition failed");
        }
        energies_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    /// exp(i H t).
    OperatorMatrix exp_i(double t) const {
        Eigen::VectorXcd phases(energies_.size());
        for (Eigen::Index k = 0; k < energies_.size(); ++k) {
            phases(k) = std::polar(1.0, energies_(k) * t);
        }
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

    /// exp(iHt) rho exp(-iHt).
    OperatorMatrix evolve(const OperatorMatrix& rho, double t) const {
        const OperatorMatrix u = exp_i(t);
        return u * rho * u.adjoint();
    }

private:
    Eigen::VectorXd energies_;
    OperatorMatrix vectors_;
};

inline OperatorMatrix evolve(const OperatorMatrix& rho, const OperatorMatrix& h, double t) {
    detail::require(t >= 0.0, "evolve: T must be >= 0 (us)");
    detail::require(rho.rows() == h.rows() && rho.cols() == h.cols() && h.rows() == h.cols(),
                    "evolve: operator dimensions differ");
    return Propagator(h).evolve(rho, t);
}

// -- coherence analysis -----------------------------------------------------------

/// Normalized intensities g_M for orders -n..n.
class CoherenceSpectrum {
public:
    explicit CoherenceSpectrum(int max_order)
        : max_order_(max_order), values_(static_cast<std::size_t>(2 * max_order + 1), 0.0) {}

    int max_order() const noexcept { return max_order_; }
    double operator[](int order) const { return values_.at(slot(order)); }
    double& operator[](int order) { return values_.at(slot(order)); }

    double total() const {
        double sum = 0.0;
        for (double v : values_) sum += v;
        return sum;
    }

private:
    std::size_t slot(int order) const {
        detail::require(order >= -max_order_ && order <= max_order_,
                        "CoherenceSpectrum: order out of range");
        return static_cast<std::size_t>(order + max_order_);
    }

    int max_order_;
    std::vector<double> values_;
};

/// g_M = Tr(rho_M rho_M^+) / Tr(S_z^2), where rho_M keeps the elements
/// <a|rho|b> with M_z(a) - M_z(b) = M.
inline CoherenceSpectrum coherence_decompose(const OperatorMatrix& rho, const SpinSystem& system) {
    detail::require(static_cast<std::size_t>(rho.rows()) == system.dim() &&
                        rho.rows() == rho.cols(),
                    "coherence_decompose: rho does not match the system dimension");
    CoherenceSpectrum out(system.size());
    const double norm = sz_norm(system);
    for (Eigen::Index b = 0; b < rho.cols(); ++b) {
        const int mz_b = system.twice_mz(b);
        for (Eigen::Index a = 0; a < rho.rows(); ++a) {
            const int order = (system.twice_mz(a) - mz_b) / 2;
            out[order] += std::norm(rho(a, b)) / norm;
        }
    }
    return out;
}

/// 2 sum_M M^2 g_M.
inline double second_moment(const CoherenceSpectrum& spectrum) {
    double sum = 0.0;
    for (int m = -spectrum.max_order(); m <= spectrum.max_order(); ++m) {
        sum += static_cast<double>(m) * m * spectrum[m];
    }
    return 2.0 * sum;
}

/// Which Hamiltonian drives the time-reversed (read-out) stage.
enum class ReverseHamiltonian {
    double_quantum,  ///< H_0 alone, as in the pulsed experiment
    effective,       ///< the preparation Hamiltonian itself: a perfect echo for any p
};

struct ProtocolSpec {
    double p = 0.0;
    double prep_time = 0.0;     ///< us, T = N tau_c
    double reverse_time = 0.0;  ///< us, N tau_0
    int phase_count = 0;        ///< 0 selects 2n + 2
    ReverseHamiltonian reverse = ReverseHamiltonian::double_quantum;

    int phases_for(const SpinSystem& system) const {
        return phase_count > 0 ? phase_count : 2 * system.size() + 2;
    }

    void validate(const SpinSystem& system) const {
        detail::require(p >= 0.0 && p <= 1.0, "ProtocolSpec: p must lie in [0, 1]");
        detail::require(prep_time >= 0.0 && reverse_time >= 0.0,
                        "ProtocolSpec: times must be >= 0 (us)");
        detail::require(phases_for(system) >= 2 * system.size() + 1,
                        "ProtocolSpec: phase_count must be >= 2n+1 to resolve orders up to n");
    }
};

namespace detail {

struct EchoOperators {
    OperatorMatrix forward;  // U_p = exp(-i T H_eff)
    OperatorMatrix reverse;  // U_0 = exp(-i tau H_rev)
    OperatorMatrix sz;
};

inline EchoOperators echo_operators(const ProtocolSpec& spec, const SpinSystem& system) {
    const OperatorMatrix h_eff = build_effective(system, spec.p);
    const Propagator prep(h_eff);
    EchoOperators ops;
    ops.forward = prep.exp_i(-spec.prep_time);
    if (spec.reverse == ReverseHamiltonian::effective) {
        ops.reverse = prep.exp_i(-spec.reverse_time);
    } else {
        ops.reverse = Propagator(build_double_quantum(system)).exp_i(-spec.reverse_time);
    }
    ops.sz = total_sz(system);
    return ops;
}

/// exp(i phi S_z), diagonal.
inline OperatorMatrix z_rotation(const SpinSystem& system, double phi) {
    const auto dim = static_cast<Eigen::Index>(system.dim());
    Eigen::VectorXcd d(dim);
    for (Eigen::Index s = 0; s < dim; ++s) d(s) = std::polar(1.0, 0.5 * phi * system.twice_mz(s));
    return d.asDiagonal();
}

}  // namespace detail

/// Echo signal Tr{U_0^+ U_phi U_p S_z U_p^+ U_phi^+ U_0 S_z} / Tr{S_z^2} at
/// phase_count equally spaced angles phi in [0, 2 pi).
inline std::vector<Complex> echo_signal(const ProtocolSpec& spec, const SpinSystem& system) {
    spec.validate(system);
    const auto ops = detail::echo_operators(spec, system);
    const OperatorMatrix prepared = ops.forward * ops.sz * ops.forward.adjoint();
    const OperatorMatrix readout = ops.reverse * ops.sz;
    const OperatorMatrix reverse_adj = ops.reverse.adjoint();
    const int count = spec.phases_for(system);
    const double norm = sz_norm(system);
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / count;
        const OperatorMatrix rot = detail::z_rotation(system, phi);
        const OperatorMatrix left = reverse_adj * rot * prepared * rot.adjoint();
        // Tr(left * readout) without forming the product.
        out.push_back((left.transpose().cwiseProduct(readout)).sum() / norm);
    }
    return out;
}

/// Coherence intensities as the Fourier harmonics of the phase-cycled echo.
/// With a perfect echo (reverse == effective and reverse_time == prep_time,
/// or p = 0 with the double-quantum reversal) this reproduces
/// coherence_decompose of the prepared state.
inline CoherenceSpectrum phase_cycle_signal(const ProtocolSpec& spec, const SpinSystem& system) {
    const auto signal = echo_signal(spec, system);
    const int count = static_cast<int>(signal.size());
    CoherenceSpectrum out(system.size());
    for (int m = -system.size(); m <= system.size(); ++m) {
        Complex acc{0.0, 0.0};
        for (int k = 0; k < count; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / count;
            acc += signal[static_cast<std::size_t>(k)] * std::polar(1.0, -m * phi);
        }
        out[m] = acc.real() / count;
    }
    return out;
}

/// Evaluates the echo trace with its eight operator factors in the printed
/// order and in every cyclic rotation of that order, for each angle in
/// `phases`. Returns the largest absolute deviation from the printed order.
inline double cyclic_permutation_check(const ProtocolSpec& spec, const SpinSystem& system,
                                       const std::vector<double>& phases = {
                                           0.0, std::numbers::pi / 3.0, std::numbers::pi}) {
    spec.validate(system);
    const auto ops = detail::echo_operators(spec, system);
    const double norm = sz_norm(system);
    double worst = 0.0;
    for (double phi : phases) {
        const OperatorMatrix rot = detail::z_rotation(system, phi);
        const std::vector<OperatorMatrix> factors = {
            ops.reverse.adjoint(), rot, ops.forward, ops.sz, ops.forward.adjoint(),
            rot.adjoint(),         ops.reverse, ops.sz};
        const auto count = factors.size();
        Complex reference{};
        for (std::size_t shift = 0; shift < count; ++shift) {
            OperatorMatrix product = factors[shift];
            for (std::size_t k = 1; k < count; ++k) product = product * factors[(shift + k) % count];
            const Complex trace = product.trace() / norm;
            if (shift == 0) {
                reference = trace;
            } else {
                worst = std::max(worst, std::abs(trace - reference));
            }
        }
    }
    return worst;
}

}  // namespace mqwidth::spin

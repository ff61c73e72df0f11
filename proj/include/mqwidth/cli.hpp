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

// Figure tables and fits behind the mqwidth command line. Every command is a
// pure function of a RunConfig and returns a Table, so the same code paths
// are exercised by the CLI and by the tests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mqwidth/error.hpp"
#include "mqwidth/exactspin.hpp"
#include "mqwidth/numerics.hpp"
#include "mqwidth/phenomodel.hpp"
#include "mqwidth/table.hpp"

namespace mqwidth::cli {

/// Inclusive linear grid with `count` points.
inline std::vector<double> linspace(double start, double stop, int count) {
    detail::require(count >= 1, "grid: point count must be >= 1");
    if (count == 1) return {start};
    std::vector<double> out(static_cast<std::size_t>(count));
    const double step = (stop - start) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + step * i;
    out.back() = stop;
    return out;
}

/// Parses "start:stop:count" or a comma-separated list of numbers.
inline std::vector<double> parse_grid(const std::string& text, const std::string& what) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
        if (used == 0 || used != s.size()) {
            throw ValidationError(what + ": cannot parse '" + s + "' as a number");
        }
        return v;
    };
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    detail::require(!parts.empty(), what + ": empty grid");
    if (sep == ':') {
        detail::require(parts.size() == 3, what + ": range grids are written start:stop:count");
        const double count = number(parts[2]);
        detail::require(count >= 1 && count == std::floor(count) && count <= 1e7,
                        what + ": count must be a positive integer");
        return linspace(number(parts[0]), number(parts[1]), static_cast<int>(count));
    }
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(number(p));
    return out;
}

struct RunConfig {
    // model defaults
    double a0 = model::defaults::kGrowthRate;       // 1/us
    std::optional<double> A2_ms2;                    // (1/ms)^2; 200, or 205.48 for fig3
    double b2_ms2 = model::defaults::kClusterDecayMs2;  // (1/ms)^2
    double lambda = 2.0;

    // sweeps
    std::vector<double> lambdas = {2.0, 1.0};
    std::vector<double> p_list = {0.05, 0.1, 0.2, 0.3, 0.5};
    std::vector<double> y_grid = linspace(0.5, 30.0, 60);
    std::vector<double> T_grid = linspace(0.0, 1000.0, 21);  // us
    int m_min = 0;
    int m_max = 30;
    double K = model::defaults::kFig3ClusterSize;
    double y_short = 10.0;
    double y_long = 30.0;
    bool frozen_ap = false;  // hold a_p = a0 instead of a0 (1 - p)

    // exact simulation
    int n = 4;
    std::string topology = "all";
    double coupling = 1.0;  // 1/us
    std::string couplings_file;
    std::vector<double> times = linspace(0.0, 4.0, 21);  // us
    double exact_p = 0.0;
    int phase_count = 0;
    bool compare_fft = false;

    // fit
    std::string fit_input;
    std::string fit_kind = "auto";
    std::string x_col;
    std::string y_col;

    int threads = 0;  // 0 = hardware concurrency

    double A2_general_ms2() const { return A2_ms2.value_or(model::defaults::kOrderDecayMs2); }
    double A2_fig3_ms2() const { return A2_ms2.value_or(model::defaults::kFig3SlopeMs2); }

    model::ModelParams params(double p, double lam, double A2_ms2_value) const {
        model::ModelParams out;
        out.a0 = a0;
        out.A2 = model::per_us2(A2_ms2_value);
        out.b2 = model::per_us2(b2_ms2);
        out.p = p;
        out.lambda = lam;
        return out;
    }

    /// Growth exponent for perturbation p, honouring frozen_ap.
    double growth(double p) const { return frozen_ap ? a0 : a0 * (1.0 - p); }

    void validate_model() const {
        detail::require(std::isfinite(a0) && a0 > 0.0,
                        "a0 must be > 0 (1/us), got " + io::format_number(a0));
        if (A2_ms2) {
            detail::require(std::isfinite(*A2_ms2) && *A2_ms2 >= 0.0,
                            "A2 must be >= 0 ((1/ms)^2), got " + io::format_number(*A2_ms2));
        }
        detail::require(std::isfinite(b2_ms2) && b2_ms2 >= 0.0,
                        "b2 must be >= 0 ((1/ms)^2), got " + io::format_number(b2_ms2));
        detail::require(std::isfinite(lambda) && lambda > 0.0,
                        "lambda must be > 0, got " + io::format_number(lambda));
    }
};

namespace detail {

inline void require_sorted(const std::vector<double>& grid, const std::string& what,
                           bool strictly_positive) {
    mqwidth::detail::require(!grid.empty(), what + ": grid must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        mqwidth::detail::require(std::isfinite(grid[i]), what + ": values must be finite");
        if (strictly_positive) {
            mqwidth::detail::require(grid[i] > 0.0, what + ": values must be > 0");
        } else {
            mqwidth::detail::require(grid[i] >= 0.0, what + ": values must be >= 0");
        }
        if (i > 0) {
            mqwidth::detail::require(grid[i] > grid[i - 1],
                                     what + ": values must be strictly increasing");
        }
    }
}

inline void require_p_list(const std::vector<double>& ps, bool allow_zero) {
    require_sorted(ps, "p list", !allow_zero);
    for (double p : ps) {
        mqwidth::detail::require(p < 1.0, "p must satisfy p < 1, got " + io::format_number(p));
    }
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results are
/// written by index, so the output order never depends on scheduling. The
/// first exception escaping a body is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
    unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

struct Solved {
    double value = std::nan("");
    std::string status = "ok";
};

inline Solved solve_k_eff(double y, double r, double lambda) {
    try {
        const double me = model::solve_effective_order(y, r, lambda);
        return {me * me, "ok"};
    } catch (const NumericalError& e) {
        return {std::nan(""), std::string("failed: ") + e.what()};
    }
}

inline io::Cell maybe(double v) {
    if (std::isnan(v)) return std::monostate{};
    return v;
}

}  // namespace detail

/// Table carrying a flag for rows whose numerical solve failed.
struct CommandResult {
    io::Table table;
    std::size_t failed_rows = 0;
};

/// Cluster size K = exp(a0 T) on the T grid: columns T_us, K, log10_K.
inline CommandResult cmd_fig2(const RunConfig& cfg) {
    cfg.validate_model();
    detail::require_sorted(cfg.T_grid, "T grid (us)", false);
    io::Table t({"T_us", "K", "log10_K"});
    for (double T : cfg.T_grid) {
        const double K = model::cluster_size(cfg.a0, T);
        t.add_row({T, K, cfg.a0 * T / std::log(10.0)});
    }
    return {std::move(t), 0};
}

/// Squared decoherence rate per order: columns M, rate_sq_per_ms2.
inline CommandResult cmd_fig3(const RunConfig& cfg) {
    cfg.validate_model();
    mqwidth::detail::require(std::isfinite(cfg.A2_fig3_ms2()) && cfg.A2_fig3_ms2() >= 0.0,
                             "A2 must be >= 0 ((1/ms)^2)");
    mqwidth::detail::require(cfg.m_min <= cfg.m_max, "M range: m-min must not exceed m-max");
    mqwidth::detail::require(cfg.K >= 1.0, "K must be >= 1 (spins)");
    const auto params = cfg.params(0.0, cfg.lambda, cfg.A2_fig3_ms2());
    io::Table t({"M", "rate_sq_per_ms2"});
    for (int M = cfg.m_min; M <= cfg.m_max; ++M) {
        t.add_row({static_cast<std::int64_t>(M),
                   model::per_ms2(model::decoherence_rate_sq(M, cfg.K, params))});
    }
    return {std::move(t), 0};
}

/// K_eff(y) for every (lambda, p) in long format: lambda, p, y, K_eff, status.
inline CommandResult cmd_fig4(const RunConfig& cfg) {
    cfg.validate_model();
    detail::require_p_list(cfg.p_list, true);
    detail::require_sorted(cfg.y_grid, "y grid", true);
    mqwidth::detail::require(!cfg.lambdas.empty(), "lambda list must not be empty");
    for (double lam : cfg.lambdas) {
        mqwidth::detail::require(std::isfinite(lam) && lam > 0.0, "lambda values must be > 0");
    }
    const double A = std::sqrt(model::per_us2(cfg.A2_general_ms2()));

    struct Key {
        double lambda, p, y;
    };
    std::vector<Key> keys;
    for (double lam : cfg.lambdas)
        for (double p : cfg.p_list)
            for (double y : cfg.y_grid) keys.push_back({lam, p, y});

    std::vector<detail::Solved> solved(keys.size());
    detail::parallel_for(keys.size(), cfg.threads, [&](std::size_t i) {
        const auto& k = keys[i];
        solved[i] = detail::solve_k_eff(k.y, A * k.p / cfg.growth(k.p), k.lambda);
    });

    CommandResult out{io::Table({"lambda", "p", "y", "K_eff", "status"}), 0};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (solved[i].status != "ok") ++out.failed_rows;
        out.table.add_row(
            {keys[i].lambda, keys[i].p, keys[i].y, detail::maybe(solved[i].value), solved[i].status});
    }
    return out;
}

/// Plateau sizes per p: p, K_eff_at_y10_gauss, K_eff_at_y10_exp, K_eff_at_y30,
/// K_st_eq19, status. The y10/y30 column names refer to the default
/// y_short/y_long.
inline CommandResult cmd_fig5(const RunConfig& cfg) {
    cfg.validate_model();
    detail::require_p_list(cfg.p_list, false);
    mqwidth::detail::require(cfg.y_short > 0.0 && cfg.y_long > 0.0,
                             "y-short and y-long must be > 0");
    const double A2 = model::per_us2(cfg.A2_general_ms2());
    mqwidth::detail::require(A2 > 0.0, "A2 must be > 0 ((1/ms)^2) for a plateau to exist");
    const double A = std::sqrt(A2);

    struct Row {
        detail::Solved short_gauss, short_exp, long_run;
        double k_st = 0.0;
    };
    std::vector<Row> rows(cfg.p_list.size());
    detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        const double p = cfg.p_list[i];
        const double a_p = cfg.growth(p);
        const double r = A * p / a_p;
        rows[i].short_gauss = detail::solve_k_eff(cfg.y_short, r, 2.0);
        rows[i].short_exp = detail::solve_k_eff(cfg.y_short, r, 1.0);
        rows[i].long_run = detail::solve_k_eff(cfg.y_long, r, cfg.lambda);
        rows[i].k_st = model::steady_state_size(a_p, A2, p);
    });

    CommandResult out{io::Table({"p", "K_eff_at_y10_gauss", "K_eff_at_y10_exp", "K_eff_at_y30",
                                 "K_st_eq19", "status"}),
                      0};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string status = "ok";
        for (const auto* s : {&r.short_gauss, &r.short_exp, &r.long_run}) {
            if (s->status != "ok") status = s->status;
        }
        if (status != "ok") ++out.failed_rows;
        out.table.add_row({cfg.p_list[i], detail::maybe(r.short_gauss.value),
                           detail::maybe(r.short_exp.value), detail::maybe(r.long_run.value), r.k_st,
                           status});
    }
    return out;
}

inline spin::SpinSystem make_system(const RunConfig& cfg) {
    if (cfg.topology == "file") {
        mqwidth::detail::require(!cfg.couplings_file.empty(),
                                 "topology 'file' needs --couplings-file");
        return spin::read_coupling_file(cfg.couplings_file);
    }
    mqwidth::detail::require(cfg.n >= spin::kMinSpins && cfg.n <= spin::kMaxSpins,
                             "n must be in [2, 12] spins (dimension cap 4096), got " +
                                 std::to_string(cfg.n));
    mqwidth::detail::require(std::isfinite(cfg.coupling), "coupling must be finite (1/us)");
    if (cfg.topology == "all") return spin::SpinSystem::all_to_all(cfg.n, cfg.coupling);
    if (cfg.topology == "chain") return spin::SpinSystem::chain(cfg.n, cfg.coupling);
    throw ValidationError("unknown topology '" + cfg.topology + "' (all, chain, file)");
}

/// Exact coherence spectra under the mixed Hamiltonian: t_us, M, g_M,
/// second_moment_K and, with compare_fft, g_M_fft from the phase-cycled echo.
inline CommandResult cmd_exact(const RunConfig& cfg) {
    const auto system = make_system(cfg);
    mqwidth::detail::require(cfg.exact_p >= 0.0 && cfg.exact_p <= 1.0,
                             "exact p must lie in [0, 1]");
    detail::require_sorted(cfg.times, "times (us)", false);
    const int n = system.size();
    mqwidth::detail::require(cfg.phase_count == 0 || cfg.phase_count >= 2 * n + 1,
                             "phase-count must be >= 2n+1");

    const spin::Propagator prop(spin::build_effective(system, cfg.exact_p));
    const auto sz = spin::total_sz(system);

    std::vector<spin::CoherenceSpectrum> block(cfg.times.size(), spin::CoherenceSpectrum(n));
    std::vector<spin::CoherenceSpectrum> fft(cfg.times.size(), spin::CoherenceSpectrum(n));
    detail::parallel_for(cfg.times.size(), cfg.threads, [&](std::size_t i) {
        block[i] = spin::coherence_decompose(prop.evolve(sz, cfg.times[i]), system);
        if (cfg.compare_fft) {
            spin::ProtocolSpec spec;
            spec.p = cfg.exact_p;
            spec.prep_time = cfg.times[i];
            spec.reverse_time = cfg.times[i];
            spec.phase_count = cfg.phase_count;
            spec.reverse = spin::ReverseHamiltonian::effective;
            fft[i] = spin::phase_cycle_signal(spec, system);
        }
    });

    std::vector<std::string> cols = {"t_us", "M", "g_M", "second_moment_K"};
    if (cfg.compare_fft) cols.push_back("g_M_fft");
    CommandResult out{io::Table(cols), 0};
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        const double k = spin::second_moment(block[i]);
        for (int M = -n; M <= n; ++M) {
            std::vector<io::Cell> row = {cfg.times[i], static_cast<std::int64_t>(M), block[i][M], k};
            if (cfg.compare_fft) row.emplace_back(fft[i][M]);
            out.table.add_row(std::move(row));
        }
    }
    return out;
}

/// Least-squares fits on a table: "exponential" fits ln(y) against x (growth
/// rate from T_us, K), "power" fits ln(y) against ln(x) (exponent from p, K).
inline io::Table fit_table(const io::Table& input, const RunConfig& cfg) {
    std::string kind = cfg.fit_kind;
    std::string x = cfg.x_col;
    std::string y = cfg.y_col;
    if (kind == "auto") {
        if (input.has_column("T_us") && input.has_column("K")) {
            kind = "exponential";
        } else if (input.has_column("p")) {
            kind = "power";
        } else {
            throw ValidationError("fit: cannot infer fit kind from header; pass --fit-kind");
        }
    }
    if (kind == "exponential") {
        if (x.empty()) x = "T_us";
        if (y.empty()) y = "K";
    } else if (kind == "power") {
        if (x.empty()) x = "p";
        if (y.empty()) {
            for (const char* c : {"K_st_eq19", "K_eff_at_y30", "K_eff"}) {
                if (input.has_column(c)) {
                    y = c;
                    break;
                }
            }
        }
        if (y.empty()) throw ValidationError("fit: no K column found; pass --y-col");
    } else {
        throw ValidationError("fit: unknown fit kind '" + kind + "' (auto, exponential, power)");
    }

    const auto xi = input.column_index(x);
    const auto yi = input.column_index(y);
    std::vector<numerics::Point2> pts;
    for (std::size_t r = 0; r < input.size(); ++r) {
        const std::string where = "line " + std::to_string(r + 2);
        double xv = 0.0;
        double yv = 0.0;
        try {
            xv = input.number(r, xi);
            yv = input.number(r, yi);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (std::isnan(xv) || std::isnan(yv)) continue;  // failed solver rows
        if (!(yv > 0.0)) throw ValidationError(where + ": " + y + " must be > 0 to take a log");
        if (kind == "power") {
            if (!(xv > 0.0)) throw ValidationError(where + ": " + x + " must be > 0 to take a log");
            pts.push_back({std::log(xv), std::log(yv)});
        } else {
            pts.push_back({xv, std::log(yv)});
        }
    }
    const auto fit = numerics::fit_line(pts);
    io::Table report({"fit", "x", "y", "points", "slope", "intercept", "r_squared"});
    const bool power = kind == "power";
    report.add_row({kind, power ? "ln(" + x + ")" : x, "ln(" + y + ")",
                    static_cast<std::int64_t>(pts.size()), fit.slope, fit.intercept,
                    fit.r_squared});
    return report;
}

inline CommandResult cmd_fit(const RunConfig& cfg) {
    mqwidth::detail::require(!cfg.fit_input.empty(), "fit: --in <table.csv> is required");
    std::ifstream in(cfg.fit_input);
    if (!in) throw ValidationError("fit: cannot open '" + cfg.fit_input + "'");
    return {fit_table(io::read_csv(in), cfg), 0};
}

}  // namespace mqwidth::cli

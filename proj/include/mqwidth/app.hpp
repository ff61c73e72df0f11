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

// mqwidth <subcommand> [--flag value ...] [--config path]
//
// Options live on the top-level app and fall through from the subcommands,
// so a config file is a flat list of key=value lines using the long option
// names. Precedence: command line > config file > built-in defaults.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mqwidth/cli.hpp"

namespace mqwidth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Multiple-quantum NMR spectral width model and exact spin simulator", "mqwidth"};
    app.set_config("--config", "", "flat key=value file; '#' starts a comment");
    app.allow_config_extras(false);

    std::string format = "csv";
    std::string out_path;
    double A2_ms2 = 0.0;
    std::string lambdas, p_list, y_grid, T_grid, times;

    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", out_path, "write to this file instead of standard output");
    app.add_option("--threads", cfg.threads, "worker threads for sweeps (0 = all cores)");

    auto* a2_opt = app.add_option("--A2", A2_ms2,
                                  "order decay constant A^2, (1/ms)^2 [200; fig3: 205.48]");
    app.add_option("--a0", cfg.a0, "growth rate a0, 1/us")->capture_default_str();
    app.add_option("--b2", cfg.b2_ms2, "cluster decay constant b^2, (1/ms)^2")
        ->capture_default_str();
    app.add_option("--lambda", cfg.lambda, "profile exponent (2 Gaussian, 1 exponential)")
        ->capture_default_str();
    app.add_option("--lambdas", lambdas, "fig4 profile exponents, comma list [2,1]");
    app.add_option("--p", p_list, "perturbation strengths, comma list or start:stop:count");
    app.add_option("--y-grid", y_grid, "reduced times a_p T, start:stop:count [0.5:30:60]");
    app.add_option("--T-grid", T_grid, "preparation times in us [0:1000:21]");
    app.add_option("--m-min", cfg.m_min, "smallest coherence order for fig3")->capture_default_str();
    app.add_option("--m-max", cfg.m_max, "largest coherence order for fig3")->capture_default_str();
    app.add_option("--K", cfg.K, "cluster size for fig3")->capture_default_str();
    app.add_option("--y-short", cfg.y_short, "fig5 short reduced time")->capture_default_str();
    app.add_option("--y-long", cfg.y_long, "fig5 long reduced time")->capture_default_str();
    app.add_flag("--frozen-ap", cfg.frozen_ap, "hold a_p = a0 for every p");

    app.add_option("--n", cfg.n, "number of spins (2..12)")->capture_default_str();
    app.add_option("--topology", cfg.topology, "all, chain or file")->capture_default_str();
    app.add_option("--coupling", cfg.coupling, "coupling b for all/chain, 1/us")
        ->capture_default_str();
    app.add_option("--couplings-file", cfg.couplings_file, "lines 'i j b_ij' (1/us)");
    app.add_option("--times", times, "evolution times in us [0:4:21]");
    app.add_option("--exact-p", cfg.exact_p, "perturbation strength for the exact run")
        ->capture_default_str();
    app.add_option("--phase-count", cfg.phase_count, "phase-cycle steps (0 = 2n+2)");
    app.add_flag("--compare-fft", cfg.compare_fft, "add phase-cycled intensities as g_M_fft");

    app.add_option("--in", cfg.fit_input, "table to fit (CSV with header)");
    app.add_option("--fit-kind", cfg.fit_kind, "auto, exponential or power")
        ->capture_default_str();
    app.add_option("--x-col", cfg.x_col, "abscissa column for fit");
    app.add_option("--y-col", cfg.y_col, "ordinate column for fit");

    app.require_subcommand(1);
    auto sub = [&](const char* name, const char* help) {
        return app.add_subcommand(name, help)->fallthrough();
    };
    auto* fig2 = sub("fig2", "cluster size K = exp(a0 T) against preparation time");
    auto* fig3 = sub("fig3", "squared decoherence rate per coherence order");
    auto* fig4 = sub("fig4", "effective cluster size against a_p T for each p and lambda");
    auto* fig5 = sub("fig5", "plateau cluster size against p");
    auto* exact = sub("exact", "exact coherence spectra of a small spin cluster");
    auto* fit = sub("fit", "least-squares exponential or power-law fit of a table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "mqwidth: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (a2_opt->count() > 0) cfg.A2_ms2 = A2_ms2;
        if (!lambdas.empty()) cfg.lambdas = parse_grid(lambdas, "lambdas");
        if (!p_list.empty()) cfg.p_list = parse_grid(p_list, "p");
        if (!y_grid.empty()) cfg.y_grid = parse_grid(y_grid, "y grid");
        if (!T_grid.empty()) cfg.T_grid = parse_grid(T_grid, "T grid (us)");
        if (!times.empty()) cfg.times = parse_grid(times, "times (us)");

        CommandResult result;
        if (*fig2) result = cmd_fig2(cfg);
        else if (*fig3) result = cmd_fig3(cfg);
        else if (*fig4) result = cmd_fig4(cfg);
        else if (*fig5) result = cmd_fig5(cfg);
        else if (*exact) result = cmd_exact(cfg);
        else if (*fit) result = cmd_fit(cfg);

        std::ofstream file;
        std::ostream* sink = &out;
        if (!out_path.empty()) {
            file.open(out_path);
            if (!file) throw ValidationError("cannot write '" + out_path + "'");
            sink = &file;
        }
        if (format == "json") {
            result.table.write_json(*sink);
        } else {
            result.table.write_csv(*sink);
        }
        if (result.failed_rows > 0) {
            err << "mqwidth: " << result.failed_rows << " row(s) failed to solve\n";
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "mqwidth: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "mqwidth: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace mqwidth::cli

// SPDX-License-Identifier: Apache-2.0
//
// rfim - photonic RF interference management simulator
// Copyright (C) 2026 The rfim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


// rfim command-line front end.
//
//   rfim simulate <scenario> --out <dir>
//   rfim tune <scenario>
//   rfim sweep <scenario> --axis <name> --values <v1,v2,...> --out <dir>
//   rfim report <dir>
//
// <scenario> is a path or the name of a bundled preset (paper_fig2, ...).

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "rfim.hpp"

#ifndef RFIM_SCENARIO_DIR
#define RFIM_SCENARIO_DIR "scenarios"
#endif

namespace {

rfim::fs::path locate_scenario(const std::string& arg)
{
    const rfim::fs::path p(arg);
    if (rfim::fs::exists(p)) {
        return p;
    }
    for (const rfim::fs::path& preset :
         {rfim::fs::path(RFIM_SCENARIO_DIR) / (arg + ".json"), rfim::fs::path(RFIM_SCENARIO_DIR) / arg}) {
        if (rfim::fs::exists(preset)) {
            return preset;
        }
    }
    throw rfim::StageError("load", "no scenario file or preset named '" + arg + "'");
}

rfim::Scenario load(const std::string& arg)
{
    try {
        return rfim::load_scenario(locate_scenario(arg));
    } catch (const rfim::StageError&) {
        throw;
    } catch (const rfim::Error& e) {
        throw rfim::StageError("load", e.what());
    }
}

void print_metrics(const rfim::RunMetrics& m)
{
    std::printf("pre-cancellation EVM    %8.3f %%\n", m.pre_evm_percent);
    std::printf("post-cancellation EVM   %8.3f %%\n", m.post_evm_percent);
    std::printf("sideband suppression    %8.2f dB\n", m.sideband_suppression_db);
    std::printf("residual interference   %8.2f dB\n", m.residual_interference_db);
    std::printf("converged               %8s\n", m.converged ? "yes" : "no");
}

void print_tune(const rfim::TuneResult& t)
{
    for (std::size_t k = 0; k < t.channels.size(); ++k) {
        const auto& c = t.channels[k];
        std::printf("channel %zu: %s  delay %.6g ns  |w| %.6g  arg(w) %.6g rad  bias %.4g V  atten %.4f dB  "
                    "path delay %.6g ns  (peak/median %.3g)\n",
                    k, c.active ? "active" : "idle  ", c.delay * 1e9, std::abs(c.weight), std::arg(c.weight),
                    c.settings.bias_voltage, c.settings.attenuation_db, c.settings.delay * 1e9,
                    c.estimate.peak_to_median);
    }
    std::printf("residual interference %.3f dB (predicted %.3f dB), converged: %s%s\n",
                t.residual_interference_power_db, t.predicted_residual_db, t.converged ? "yes" : "no",
                t.regularized ? ", regularized" : "");
}

void print_warnings(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
}

int report_dir(const rfim::fs::path& dir)
{
    const std::string top = rfim::read_text_file(dir / rfim::manifest_file);
    int status = 0;
    if (rfim::fs::exists(dir / "sweep.csv")) {
        for (const auto& bad : rfim::verify_manifest(dir)) {
            std::fprintf(stderr, "%s: %s\n", dir.c_str(), bad.c_str());
            status = 1;
        }
        std::fputs(rfim::read_text_file(dir / "sweep.csv").c_str(), stdout);
        for (const auto& e : rfim::read_manifest(dir)) {
            if (e.name != "sweep.csv") {
                const rfim::fs::path run = dir / rfim::fs::path(e.name).parent_path();
                std::vector<std::string> problems;
                rfim::rerender_run(run, &problems);
                for (const auto& p : problems) {
                    std::fprintf(stderr, "%s: %s\n", run.c_str(), p.c_str());
                    status = 1;
                }
            }
        }
    } else {
        std::vector<std::string> problems;
        const auto rj = rfim::rerender_run(dir, &problems);
        for (const auto& p : problems) {
            std::fprintf(stderr, "%s: %s\n", dir.c_str(), p.c_str());
            status = 1;
        }
        const auto& m = rj.at("metrics");
        std::printf("scenario                %s\n", rj.at("scenario").at("name").get<std::string>().c_str());
        std::printf("pre-cancellation EVM    %8.3f %%\n", m.at("pre_evm_percent").get<double>());
        std::printf("post-cancellation EVM   %8.3f %%\n", m.at("post_evm_percent").get<double>());
        std::printf("sideband suppression    %8.2f dB\n", m.at("sideband_suppression_db").get<double>());
        std::printf("residual interference   %8.2f dB\n", m.at("residual_interference_db").get<double>());
    }
    std::printf("%s\n", status == 0 ? "tables re-rendered, all digests verify" : "verification FAILED");
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rfim - photonic RF interference management simulator"};
    app.set_version_flag("--version", std::string(rfim::library_version));
    app.require_subcommand(1);

    std::string scenario_arg;
    std::string out_dir;
    std::string axis;
    std::vector<double> values;
    unsigned threads = 0;
    bool as_json = false;

    auto* simulate = app.add_subcommand("simulate", "run one scenario and write a run directory");
    simulate->add_option("scenario", scenario_arg, "scenario file or preset name")->required();
    simulate->add_option("--out", out_dir, "output directory")->required();

    auto* tune = app.add_subcommand("tune", "tune the reference channels and print the settings");
    tune->add_option("scenario", scenario_arg, "scenario file or preset name")->required();
    tune->add_flag("--json", as_json, "print JSON instead of text");

    auto* sweep = app.add_subcommand("sweep", "run a scenario over one parameter");
    sweep->add_option("scenario", scenario_arg, "scenario file or preset name")->required();
    sweep->add_option("--axis", axis, "order | sir_db | interferer_count | center_freq | delay_error");
    sweep->add_option("--values", values, "comma-separated values")->delimiter(',');
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--threads", threads, "worker threads (0 = all cores)");

    std::string report_arg;
    auto* report = app.add_subcommand("report", "verify a run or sweep directory and re-render its tables");
    report->add_option("dir", report_arg, "run or sweep directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const rfim::Scenario s = load(scenario_arg);
            const rfim::RunReport r = rfim::run_simulation(s);
            print_warnings(r.warnings);
            const auto files = rfim::emit_outputs(r, out_dir);
            print_metrics(r.metrics);
            std::printf("wrote %zu files + %s to %s\n", files.size(), rfim::manifest_file, out_dir.c_str());
        } else if (*tune) {
            const rfim::Scenario s = load(scenario_arg);
            const rfim::TuneResult t = rfim::tune(s);
            print_warnings(t.warnings);
            if (as_json) {
                rfim::RunReport r;
                r.tune = t;
                std::cout << rfim::report_to_json(r).at("tune").dump(2) << "\n";
            } else {
                print_tune(t);
            }
        } else if (*sweep) {
            const rfim::Scenario s = load(scenario_arg);
            if (axis.empty() && s.sweep) {
                axis = s.sweep->axis;
            }
            if (values.empty() && s.sweep) {
                values = s.sweep->values;
            }
            if (axis.empty() || values.empty()) {
                throw rfim::StageError("sweep", "--axis and --values are required (the scenario has no sweep section)");
            }
            const auto reports = rfim::run_sweep(s, axis, values, threads);
            rfim::emit_sweep(axis, values, reports, out_dir);
            std::fputs(rfim::render_sweep_table(axis, values, reports).c_str(), stdout);
        } else if (*report) {
            return report_dir(report_arg);
        }
    } catch (const rfim::StageError& e) {
        std::fprintf(stderr, "error %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error [io]: %s\n", e.what());
        return 1;
    }
    return 0;
}

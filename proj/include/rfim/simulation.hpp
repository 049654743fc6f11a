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

#pragma once

// End-to-end runs and parameter sweeps.

#include <array>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include "rfim/canceller.hpp"
#include "rfim/evm.hpp"

#ifndef RFIM_VERSION
#define RFIM_VERSION "0.0.0"
#endif

namespace rfim {

inline constexpr const char* library_version = RFIM_VERSION;

/// Offsets from the carrier, in Hz, of the interference sidebands used to
/// quantify suppression outside the SOI band.
inline constexpr double sideband_inner_offset = 5e6;
inline constexpr double sideband_outer_offset = 20e6;

struct RunMetrics {
    double pre_evm_percent = 0.0;
    double post_evm_percent = 0.0;
    double pre_sideband_db = 0.0;
    double post_sideband_db = 0.0;
    double sideband_suppression_db = 0.0;
    double pre_soi_band_db = 0.0;
    double post_soi_band_db = 0.0;
    double residual_interference_db = 0.0;
    double predicted_residual_db = 0.0;
    bool converged = false;

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

/// Quantities derived while resolving the scenario.
struct DerivedSettings {
    std::size_t num_symbols = 0;
    int samples_per_symbol = 0;
    std::size_t buffer_length = 0;
    double effective_carrier = 0.0;

    friend bool operator==(const DerivedSettings&, const DerivedSettings&) = default;
};

struct RunReport {
    Scenario scenario;  // resolved
    DerivedSettings derived;
    std::vector<std::string> warnings;
    TuneResult tune;
    EvmReport pre_evm;
    EvmReport post_evm;
    Spectrum pre_spectrum;
    Spectrum post_spectrum;
    RunMetrics metrics;
    std::string version = library_version;
    std::string evm_normalization = "rms-reference, data-aided least-squares gain";
    double wall_clock_seconds = 0.0;

    /// Everything that must be reproducible bit for bit.
    bool same_results(const RunReport& o) const
    {
        return scenario == o.scenario && derived == o.derived && tune == o.tune && pre_evm == o.pre_evm
               && post_evm == o.post_evm && pre_spectrum == o.pre_spectrum && post_spectrum == o.post_spectrum
               && metrics == o.metrics;
    }
};

/// Linear power in |f - f_c| in [inner, outer].
inline double sideband_power(const Spectrum& s, double carrier, double inner = sideband_inner_offset,
                             double outer = sideband_outer_offset)
{
    return from_db(band_power(s, carrier - outer, carrier - inner)) + from_db(band_power(s, carrier + inner, carrier + outer));
}

inline std::size_t spectrum_segment(std::size_t valid_len)
{
    std::size_t seg = default_welch_segment;
    while (seg > 64 && 2 * seg > valid_len) {
        seg /= 2;
    }
    return seg;
}

/// generate -> mix -> modulate -> paths -> tune -> combine/detect ->
/// demodulate. The pre-cancellation baseline is the same chain with every
/// reference weight zeroed.
inline RunReport run_simulation(const Scenario& scenario)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    try {
        rep.warnings = validate(scenario);
    } catch (const Error& e) {
        throw StageError("validate", e.what());
    }
    const LinkSignals link = generate_link(scenario);
    const Scenario& s = link.scenario;
    rep.scenario = s;
    rep.derived.num_symbols = s.soi.qam.num_symbols;
    rep.derived.samples_per_symbol = link.soi.samples_per_symbol;
    rep.derived.buffer_length = link.soi.waveform.size();
    rep.derived.effective_carrier = link.carrier;

    rep.tune = tune(link);
    rep.warnings.insert(rep.warnings.end(), rep.tune.warnings.begin(), rep.tune.warnings.end());

    std::vector<ChannelSettings> post_settings = rep.tune.applied_settings(s);
    if (s.sim.delay_error != 0.0) {
        for (std::size_t k = 0; k < post_settings.size(); ++k) {
            if (rep.tune.converged && rep.tune.channels[k].active) {
                post_settings[k].delay = std::max(0.0, post_settings[k].delay + s.sim.delay_error);
            }
        }
    }
    Waveform pre = detect(link, link.received, zeroed_settings(s));
    Waveform post = detect(link, link.received, post_settings);
    // report spectra on the nominal RF axis even when simulating at a scaled carrier
    pre.center_freq = s.sim.center_freq;
    post.center_freq = s.sim.center_freq;

    try {
        rep.pre_evm = demodulate_qam(pre, s.soi.qam, link.soi.symbols);
        rep.post_evm = demodulate_qam(post, s.soi.qam, link.soi.symbols);
    } catch (const Error& e) {
        throw StageError("demodulate", e.what());
    }
    try {
        const std::size_t seg = spectrum_segment(std::min(pre.valid.size(), post.valid.size()));
        rep.pre_spectrum = welch_psd(pre, seg, default_welch_overlap);
        rep.post_spectrum = welch_psd(post, seg, default_welch_overlap);
    } catch (const Error& e) {
        throw StageError("spectrum", e.what());
    }

    const double fc = s.sim.center_freq;
    const double half_soi = 0.5 * s.soi.qam.occupied_bandwidth();
    auto& m = rep.metrics;
    m.pre_evm_percent = rep.pre_evm.evm_rms_percent;
    m.post_evm_percent = rep.post_evm.evm_rms_percent;
    try {
        m.pre_sideband_db = to_db(sideband_power(rep.pre_spectrum, fc));
        m.post_sideband_db = to_db(sideband_power(rep.post_spectrum, fc));
        m.pre_soi_band_db = band_power(rep.pre_spectrum, fc - half_soi, fc + half_soi);
        m.post_soi_band_db = band_power(rep.post_spectrum, fc - half_soi, fc + half_soi);
    } catch (const Error& e) {
        throw StageError("band_power", e.what());
    }
    m.sideband_suppression_db = m.pre_sideband_db - m.post_sideband_db;
    m.residual_interference_db = rep.tune.residual_interference_power_db;
    m.predicted_residual_db = rep.tune.predicted_residual_db;
    m.converged = rep.tune.converged;

    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Copy of `base` with one named parameter set to `value`.
///
///   order             QAM order of the SOI
///   sir_db            every interferer gain = soi gain * 10^(-sir/20)
///   interferer_count  truncate, or extend by cloning the last interferer
///                     (new seed, staggered delay) and reference channel
///                     (next free wavelength)
///   center_freq       RF carrier, Hz
///   delay_error       offset added to tuned reference delays, s
inline Scenario apply_sweep_value(const Scenario& base, const std::string& axis, double value)
{
    Scenario s = base;
    s.sweep.reset();
    if (axis == "order") {
        s.soi.qam.order = static_cast<int>(std::lround(value));
        if (std::abs(value - std::round(value)) > 1e-9 || !is_supported_qam_order(s.soi.qam.order)) {
            throw InvalidArgument("sweep: order must be one of 4, 16, 64, 256 (got " + std::to_string(value) + ")");
        }
    } else if (axis == "sir_db") {
        for (auto& it : s.interferers) {
            it.gain = s.soi.gain * std::pow(10.0, -value / 20.0);
        }
    } else if (axis == "interferer_count") {
        if (value < 0.0 || std::abs(value - std::round(value)) > 1e-9) {
            throw InvalidArgument("sweep: interferer_count must be a non-negative integer");
        }
        const auto count = static_cast<std::size_t>(std::lround(value));
        if (count < s.interferers.size()) {
            s.interferers.resize(count);
        }
        require(!base.interferers.empty() || count == 0, "sweep: cannot extend a scenario without interferers");
        while (s.interferers.size() < count) {
            InterfererSpec it = base.interferers.back();
            const auto extra = s.interferers.size() - base.interferers.size() + 1;
            it.fm.seed += 1000003ULL * extra;
            it.delay += 3.1e-9 * static_cast<double>(extra);
            s.interferers.push_back(it);
        }
        while (s.reference_channels.size() < std::max<std::size_t>(count, 1)) {
            ReferenceChannel ch = s.reference_channels.back();
            double wl = ch.path.wavelength_nm;
            auto taken = [&](double w) {
                if (std::abs(w - s.receiver_path.wavelength_nm) < 1e-6) {
                    return true;
                }
                return std::any_of(s.reference_channels.begin(), s.reference_channels.end(),
                                   [&](const ReferenceChannel& c) { return std::abs(c.path.wavelength_nm - w) < 1e-6; });
            };
            while (taken(wl)) {
                wl += 2.0;
            }
            ch.path.wavelength_nm = wl;
            s.reference_channels.push_back(ch);
        }
    } else if (axis == "center_freq") {
        s.sim.center_freq = value;
    } else if (axis == "delay_error") {
        s.sim.delay_error = value;
    } else {
        throw InvalidArgument("sweep: unknown axis '" + axis
                              + "' (expected order, sir_db, interferer_count, center_freq or delay_error)");
    }
    return s;
}

/// Independent runs of `base` with `axis` set to each value, in input
/// order. Runs are distributed over `threads` workers (0 = hardware
/// concurrency); results do not depend on the thread count.
inline std::vector<RunReport> run_sweep(const Scenario& base, const std::string& axis, std::span<const double> values,
                                        unsigned threads = 0)
{
    if (!is_sweep_axis_name(axis)) {
        throw StageError("sweep", "unknown axis '" + axis + "'");
    }
    std::vector<Scenario> scenarios;
    for (double v : values) {
        try {
            scenarios.push_back(apply_sweep_value(base, axis, v));
        } catch (const Error& e) {
            throw StageError("sweep", e.what());
        }
    }
    std::vector<RunReport> out(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                out[i] = run_simulation(scenarios[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, scenarios.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                throw StageError("sweep[" + std::to_string(i) + "]", e.what());
            }
        }
    }
    return out;
}

/// Linear interpolation of the axis value where `metric` crosses `target`
/// between consecutive sweep points; empty when it never does.
template <typename Metric>
std::optional<double> locate_crossing(std::span<const double> values, std::span<const RunReport> reports,
                                      double target, Metric&& metric)
{
    for (std::size_t i = 1; i < values.size() && i < reports.size(); ++i) {
        const double a = metric(reports[i - 1]) - target;
        const double b = metric(reports[i]) - target;
        if (a == 0.0) {
            return values[i - 1];
        }
        if ((a < 0.0) != (b < 0.0)) {
            return values[i - 1] + (values[i] - values[i - 1]) * a / (a - b);
        }
    }
    return std::nullopt;
}

} // namespace rfim

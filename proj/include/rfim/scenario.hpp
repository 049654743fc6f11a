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

// Experiment description: transmitters, reference channels, device
// settings, simulation grid and seeds.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rfim/photonics.hpp"

namespace rfim {

struct SoiSpec {
    QamConfig qam;
    double gain = 0.5;
    std::uint64_t seed = 7;

    friend bool operator==(const SoiSpec&, const SoiSpec&) = default;
};

struct InterfererSpec {
    FmNoiseConfig fm;
    double gain = 0.5;
    double delay = 23.7e-9;  // RF propagation delay to the receiver, s

    friend bool operator==(const InterfererSpec&, const InterfererSpec&) = default;
};

/// One reference channel: modulator plus free-space path. Channel k carries
/// the reference copy of interferer k.
struct ReferenceChannel {
    MzmParams modulator{.drive_scale = 1.2};
    OpticalPathParams path{.wavelength_nm = 1560.0, .excess_loss_db = 1.0};

    friend bool operator==(const ReferenceChannel&, const ReferenceChannel&) = default;
};

struct SimSettings {
    double sample_rate = 200e6;
    double duration = 500e-6;
    double center_freq = 2.4e9;
    Fidelity fidelity = Fidelity::linearized;
    double passband_carrier = 20e6;  // scaled carrier used in passband mode
    double search_window = 1e-6;     // delay search half-width, s
    double delay_error = 0.0;        // added to tuned reference delays, s

    friend bool operator==(const SimSettings&, const SimSettings&) = default;
};

struct SweepSpec {
    std::string axis;
    std::vector<double> values;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct Scenario {
    std::string name = "unnamed";
    SimSettings sim;
    SoiSpec soi;
    std::vector<InterfererSpec> interferers;
    MzmParams receiver_modulator{.drive_scale = 0.5};
    OpticalPathParams receiver_path{.wavelength_nm = 1544.0};
    std::vector<ReferenceChannel> reference_channels;
    PdParams pd;
    std::optional<SweepSpec> sweep;

    /// Carrier the simulated chain actually runs at.
    double effective_carrier() const
    {
        return sim.fidelity == Fidelity::passband ? sim.passband_carrier : sim.center_freq;
    }

    std::size_t buffer_length() const
    {
        return soi.qam.num_symbols * static_cast<std::size_t>(std::lround(sim.sample_rate / soi.qam.symbol_rate));
    }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline constexpr std::size_t max_reference_channels = 8;

/// Parameters a sweep may vary.
inline constexpr std::array<std::string_view, 5> sweep_axis_names{"order", "sir_db", "interferer_count", "center_freq",
                                                                  "delay_error"};

inline bool is_sweep_axis_name(std::string_view axis)
{
    return std::find(sweep_axis_names.begin(), sweep_axis_names.end(), axis) != sweep_axis_names.end();
}

namespace detail {

    inline void check(bool cond, const std::string& field, const std::string& what)
    {
        if (!cond) {
            throw InvalidArgument("invalid scenario: " + field + " " + what);
        }
    }

    inline void check_modulator(const MzmParams& m, const std::string& f)
    {
        check(m.v_pi > 0.0, f + ".v_pi", "must be > 0");
        check(m.input_power > 0.0, f + ".input_power", "must be > 0");
        check(m.insertion_loss_db >= 0.0, f + ".insertion_loss_db", "must be >= 0");
        check(m.extinction_ratio_db > 0.0, f + ".extinction_ratio_db", "must be > 0");
        check(std::isfinite(m.bias_voltage), f + ".bias_voltage", "must be finite");
        check(std::isfinite(m.drive_scale) && m.drive_scale >= 0.0, f + ".drive_scale", "must be >= 0");
    }

    inline void check_path(const OpticalPathParams& p, const std::string& f, double max_delay)
    {
        check(p.wavelength_nm > 0.0, f + ".wavelength_nm", "must be > 0");
        check(p.attenuation_db >= 0.0, f + ".attenuation_db", "must be >= 0");
        check(p.excess_loss_db >= 0.0, f + ".excess_loss_db", "must be >= 0");
        check(p.delay >= 0.0 && p.delay < max_delay, f + ".delay", "must lie in [0, duration/4)");
    }

} // namespace detail

/// Checks every invariant of a scenario. Throws InvalidArgument naming the
/// offending field; returns non-fatal warnings.
inline std::vector<std::string> validate(const Scenario& s)
{
    using detail::check;
    std::vector<std::string> warnings;
    const auto& sim = s.sim;
    check(sim.sample_rate > 0.0, "sim.sample_rate", "must be > 0");
    check(sim.duration > 0.0, "sim.duration", "must be > 0");
    check(sim.center_freq >= 0.0, "sim.center_freq", "must be >= 0");
    check(sim.passband_carrier > 0.0, "sim.passband_carrier", "must be > 0");
    check(sim.search_window > 0.0 && sim.search_window <= 0.25 * sim.duration, "sim.search_window",
          "must lie in (0, duration/4]");
    check(std::isfinite(sim.delay_error), "sim.delay_error", "must be finite");
    const double max_delay = 0.25 * sim.duration;

    const auto& q = s.soi.qam;
    check(is_supported_qam_order(q.order), "soi.order", "must be one of 4, 16, 64, 256");
    check(q.symbol_rate > 0.0, "soi.symbol_rate", "must be > 0");
    check(q.rolloff >= 0.0 && q.rolloff <= 1.0, "soi.rolloff", "must lie in [0, 1]");
    check(q.filter_span >= 2 && q.filter_span % 2 == 0, "soi.filter_span", "must be an even number >= 2");
    check(sim.sample_rate >= 4.0 * q.symbol_rate, "soi.symbol_rate", "must be at most sample_rate / 4");
    try {
        (void)samples_per_symbol(sim.sample_rate, q.symbol_rate);
    } catch (const InvalidArgument& e) {
        check(false, "soi.symbol_rate", e.what());
    }
    check(sim.duration * q.symbol_rate >= 64.0, "sim.duration", "must hold at least 64 symbols");
    check(s.soi.gain >= 0.0, "soi.gain", "must be >= 0");

    for (std::size_t i = 0; i < s.interferers.size(); ++i) {
        const auto& it = s.interferers[i];
        const std::string f = "interferers[" + std::to_string(i) + "]";
        check(it.gain >= 0.0, f + ".gain", "must be >= 0");
        check(it.delay >= 0.0 && it.delay < max_delay, f + ".delay", "must lie in [0, duration/4)");
        check(it.fm.modulating_noise_bandwidth > 0.0 && it.fm.modulating_noise_bandwidth < 0.5 * sim.sample_rate,
              f + ".modulating_noise_bandwidth", "must lie in (0, sample_rate/2)");
        check(it.fm.target_occupied_bandwidth > 0.0, f + ".target_occupied_bandwidth", "must be > 0");
        check(sim.sample_rate >= 4.0 * it.fm.target_occupied_bandwidth, f + ".target_occupied_bandwidth",
              "must be at most sample_rate / 4");
        check(!it.fm.freq_deviation || *it.fm.freq_deviation >= 0.0, f + ".freq_deviation", "must be >= 0");
    }

    detail::check_modulator(s.receiver_modulator, "receiver.modulator");
    detail::check_path(s.receiver_path, "receiver.path", max_delay);
    check(!s.reference_channels.empty(), "reference_channels", "must hold at least one channel");
    check(s.reference_channels.size() <= max_reference_channels, "reference_channels", "must hold at most 8 channels");
    std::vector<double> wavelengths{s.receiver_path.wavelength_nm};
    for (std::size_t k = 0; k < s.reference_channels.size(); ++k) {
        const std::string f = "reference_channels[" + std::to_string(k) + "]";
        detail::check_modulator(s.reference_channels[k].modulator, f + ".modulator");
        detail::check_path(s.reference_channels[k].path, f + ".path", max_delay);
        const double wl = s.reference_channels[k].path.wavelength_nm;
        for (double other : wavelengths) {
            check(std::abs(other - wl) >= 1e-6, f + ".path.wavelength_nm",
                  "collides with another channel's wavelength (" + std::to_string(wl) + " nm)");
        }
        wavelengths.push_back(wl);
    }
    check(s.pd.responsivity > 0.0, "pd.responsivity", "must be > 0");
    check(s.pd.thermal_noise_density >= 0.0, "pd.thermal_noise_density", "must be >= 0");

    if (s.sweep) {
        check(is_sweep_axis_name(s.sweep->axis), "sweep.axis",
              "must be one of order, sir_db, interferer_count, center_freq, delay_error");
        check(!s.sweep->values.empty(), "sweep.values", "must not be empty");
    }

    if (s.reference_channels.size() < s.interferers.size()) {
        warnings.push_back("fewer reference channels (" + std::to_string(s.reference_channels.size())
                           + ") than interferers (" + std::to_string(s.interferers.size())
                           + "); cancellation will be partial");
    }
    if (sim.fidelity == Fidelity::passband && sim.center_freq != sim.passband_carrier) {
        warnings.push_back("passband fidelity simulates at the scaled carrier "
                           + std::to_string(sim.passband_carrier) + " Hz");
        for (std::size_t i = 0; i < s.interferers.size(); ++i) {
            // the lower spectral tail folds about 0 Hz and cannot be cancelled
            if (sim.passband_carrier < s.interferers[i].fm.target_occupied_bandwidth) {
                warnings.push_back("passband carrier is below the occupied bandwidth of interferers["
                                   + std::to_string(i) + "]; spectral folding will limit cancellation");
            }
        }
    }
    return warnings;
}

} // namespace rfim

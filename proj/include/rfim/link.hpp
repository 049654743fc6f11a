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

// Assembly of the full link: transmitters, receiver mix, and the optical
// chain from modulators to photodetector.

#include "rfim/scenario.hpp"

namespace rfim {

/// Bias / attenuation / delay of one reference channel.
struct ChannelSettings {
    double bias_voltage = 0.0;
    double attenuation_db = 0.0;
    double delay = 0.0;

    friend bool operator==(const ChannelSettings&, const ChannelSettings&) = default;
};

/// Settings as configured in the scenario.
inline ChannelSettings configured_settings(const ReferenceChannel& ch)
{
    return {ch.modulator.bias_voltage, ch.path.attenuation_db, ch.path.delay};
}

/// Null-biased modulator: the channel contributes no RF, i.e. weight zero.
inline ChannelSettings zeroed_settings(const ReferenceChannel& ch)
{
    return {0.0, ch.path.attenuation_db, ch.path.delay};
}

inline std::vector<ChannelSettings> zeroed_settings(const Scenario& s)
{
    std::vector<ChannelSettings> out;
    for (const auto& ch : s.reference_channels) {
        out.push_back(zeroed_settings(ch));
    }
    return out;
}

/// Fills every derived or calibrated quantity: symbol count from the
/// duration and the FM deviation of any interferer that left it empty.
inline Scenario resolve_scenario(Scenario s)
{
    const int sps = samples_per_symbol(s.sim.sample_rate, s.soi.qam.symbol_rate);
    s.soi.qam.num_symbols =
        static_cast<std::size_t>(std::floor(s.sim.duration * s.soi.qam.symbol_rate + 1e-9));
    const std::size_t n = s.soi.qam.num_symbols * static_cast<std::size_t>(sps);
    for (auto& it : s.interferers) {
        if (!it.fm.freq_deviation) {
            // the occupied bandwidth does not depend on the carrier; calibrate at 0 Hz
            it.fm.freq_deviation = calibrate_fm_deviation(it.fm, s.sim.sample_rate, 0.0, n);
        }
    }
    return s;
}

/// Every RF signal of one scenario realisation, at the effective carrier.
struct LinkSignals {
    Scenario scenario;  // resolved
    double carrier = 0.0;
    QamSignal soi;
    std::vector<Waveform> interferers;  // as transmitted: also the reference copies
    Waveform received;                  // SOI + interference at the receiver antenna
    Waveform interference_at_rx;        // interference-only part of `received`
    Waveform soi_at_rx;                 // SOI-only part of `received`
};

inline LinkSignals generate_link(const Scenario& scenario)
{
    LinkSignals link;
    try {
        link.scenario = resolve_scenario(scenario);
    } catch (const Error& e) {
        throw StageError("resolve", e.what());
    }
    const Scenario& s = link.scenario;
    link.carrier = s.effective_carrier();
    const double fs = s.sim.sample_rate;
    try {
        link.soi = generate_qam_soi(s.soi.qam, s.soi.seed, fs, link.carrier);
        const std::size_t n = link.soi.waveform.size();
        for (const auto& it : s.interferers) {
            link.interferers.push_back(generate_fm_noise(it.fm, fs, link.carrier, n));
        }
    } catch (const Error& e) {
        throw StageError("generate", e.what());
    }
    try {
        link.soi_at_rx = s.soi.gain * link.soi.waveform;
        Waveform interference(CVec(link.soi.waveform.size(), cplx(0.0, 0.0)), fs, link.carrier);
        for (std::size_t i = 0; i < s.interferers.size(); ++i) {
            interference = mix_at_receiver(interference, link.interferers[i], 1.0, s.interferers[i].gain,
                                           s.interferers[i].delay);
        }
        link.interference_at_rx = interference;
        link.received = link.soi_at_rx + interference;
    } catch (const Error& e) {
        throw StageError("mix", e.what());
    }
    return link;
}

/// Runs `rx_input` through the receiver modulator and every reference
/// channel (driven by its interferer copy with the given settings) and
/// returns the photodetected RF current.
inline Waveform detect(const LinkSignals& link, const Waveform& rx_input, std::span<const ChannelSettings> settings)
{
    const Scenario& s = link.scenario;
    require(settings.size() == s.reference_channels.size(), "detect: one setting per reference channel required");
    const Fidelity mode = s.sim.fidelity;
    try {
        std::vector<OpticalPowerSignal> optical;
        optical.push_back(apply_optical_path(
            mzm_modulate(rx_input, s.receiver_modulator, mode, s.receiver_path.wavelength_nm), s.receiver_path));
        for (std::size_t k = 0; k < s.reference_channels.size(); ++k) {
            const auto& ch = s.reference_channels[k];
            MzmParams mzm = ch.modulator;
            mzm.bias_voltage = settings[k].bias_voltage;
            OpticalPathParams path = ch.path;
            path.attenuation_db = settings[k].attenuation_db;
            path.delay = settings[k].delay;
            const Waveform drive = k < link.interferers.size()
                                       ? link.interferers[k]
                                       : Waveform(CVec(rx_input.size(), cplx(0.0, 0.0)), rx_input.sample_rate,
                                                  rx_input.center_freq);
            optical.push_back(apply_optical_path(mzm_modulate(drive, mzm, mode, path.wavelength_nm), path));
        }
        return combine_and_detect(optical, s.pd);
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError("photonics", e.what());
    }
}

} // namespace rfim

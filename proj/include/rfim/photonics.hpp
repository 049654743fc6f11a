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

// Optical chain: Mach-Zehnder intensity modulators, attenuated/delayed
// free-space paths, and square-law photodetection of wavelength-distinct
// (incoherently adding) optical carriers.

#include <cstdint>
#include <limits>
#include <random>

#include "rfim/waveforms.hpp"

namespace rfim {

enum class Fidelity {
    linearized,  // small-signal slope about the bias point, complex envelope
    passband,    // full cosine transfer on a real signal at a scaled carrier
};

inline const char* to_string(Fidelity f)
{
    return f == Fidelity::linearized ? "linearized" : "passband";
}

struct MzmParams {
    double v_pi = 5.0;
    double bias_voltage = 2.5;
    double insertion_loss_db = 4.0;
    double extinction_ratio_db = 30.0;  // +inf for an ideal modulator
    double input_power = 10e-3;         // W
    double drive_scale = 1.0;           // V per unit waveform amplitude

    double t_max() const { return from_db(-insertion_loss_db); }
    double epsilon() const { return std::isinf(extinction_ratio_db) ? 0.0 : from_db(-extinction_ratio_db); }
    double t_floor() const { return t_max() * epsilon(); }

    friend bool operator==(const MzmParams&, const MzmParams&) = default;
};

inline void validate(const MzmParams& p)
{
    require(p.v_pi > 0.0, "modulator: v_pi must be > 0");
    require(p.input_power > 0.0, "modulator: input_power must be > 0");
    require(p.insertion_loss_db >= 0.0, "modulator: insertion_loss_db must be >= 0");
    require(p.extinction_ratio_db > 0.0, "modulator: extinction_ratio_db must be > 0");
    require(std::isfinite(p.bias_voltage), "modulator: bias_voltage must be finite");
    require(std::isfinite(p.drive_scale) && p.drive_scale >= 0.0, "modulator: drive_scale must be >= 0");
}

/// Power transmission P_out / P_in at instantaneous drive v (bias added).
inline double transmission(const MzmParams& p, double v)
{
    const double eps = p.epsilon();
    return p.t_max() * ((1.0 - eps) * 0.5 * (1.0 + std::cos(pi * (v + p.bias_voltage) / p.v_pi)) + eps);
}

/// Small-signal slope dP_out/dv at the bias point, in W/V.
inline double linearized_gain(const MzmParams& p)
{
    return -(pi * p.input_power * p.t_max() * (1.0 - p.epsilon())) / (2.0 * p.v_pi)
           * std::sin(pi * p.bias_voltage / p.v_pi);
}

/// |slope| at quadrature, the largest small-signal gain the device offers.
inline double quadrature_gain(const MzmParams& p)
{
    return (pi * p.input_power * p.t_max() * (1.0 - p.epsilon())) / (2.0 * p.v_pi);
}

/// Mean optical output power at the bias point with no drive.
inline double bias_point_power(const MzmParams& p)
{
    return p.input_power * transmission(p, 0.0);
}

struct OpticalPathParams {
    double wavelength_nm = 1560.0;
    double attenuation_db = 0.0;
    double delay = 0.0;  // s
    double excess_loss_db = 0.0;

    double linear_gain() const { return from_db(-(attenuation_db + excess_loss_db)); }

    friend bool operator==(const OpticalPathParams&, const OpticalPathParams&) = default;
};

inline void validate(const OpticalPathParams& p)
{
    require(p.wavelength_nm > 0.0, "optical path: wavelength_nm must be > 0");
    require(p.attenuation_db >= 0.0, "optical path: attenuation_db must be >= 0");
    require(p.excess_loss_db >= 0.0, "optical path: excess_loss_db must be >= 0");
    require(p.delay >= 0.0, "optical path: delay must be >= 0");
}

/// Instantaneous optical power on one wavelength.
///
/// Linearized signals hold P(t) = dc + Re{ envelope(t) e^{j 2 pi carrier t} };
/// passband signals hold P(t) directly as real samples.
struct OpticalPowerSignal {
    Fidelity representation = Fidelity::linearized;
    double dc = 0.0;
    CVec envelope;
    RVec power;
    double sample_rate = 0.0;
    double carrier = 0.0;
    double wavelength_nm = 0.0;
    SampleRange valid;

    std::size_t size() const noexcept
    {
        return representation == Fidelity::linearized ? envelope.size() : power.size();
    }

    /// Smallest instantaneous power over the valid region (W).
    double min_power() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = valid.begin; i < valid.end; ++i) {
            m = std::min(m, representation == Fidelity::linearized ? dc - std::abs(envelope[i]) : power[i]);
        }
        return m;
    }
};

struct PdParams {
    double responsivity = 0.8;  // A/W
    bool ac_coupled = true;
    double thermal_noise_density = 0.0;  // A/sqrt(Hz), one-sided
    std::uint64_t seed = 5;

    friend bool operator==(const PdParams&, const PdParams&) = default;
};

inline void validate(const PdParams& p)
{
    require(p.responsivity > 0.0, "photodiode: responsivity must be > 0");
    require(p.thermal_noise_density >= 0.0, "photodiode: thermal_noise_density must be >= 0");
}

/// Intensity-modulates a laser at `wavelength_nm` with the RF drive
/// v(t) = drive_scale * Re{ rf(t) e^{j 2 pi f_c t} }.
///
/// Passband mode evaluates the cosine transfer directly with f_c = the
/// waveform's own center frequency, so callers pass a scaled carrier.
inline OpticalPowerSignal mzm_modulate(const Waveform& rf, const MzmParams& params, Fidelity mode,
                                       double wavelength_nm = 1544.0)
{
    validate(params);
    require(rf.sample_rate > 0.0 && !rf.samples.empty(), "mzm_modulate: empty waveform");

    OpticalPowerSignal out;
    out.representation = mode;
    out.sample_rate = rf.sample_rate;
    out.carrier = rf.center_freq;
    out.wavelength_nm = wavelength_nm;
    out.valid = rf.valid;

    if (mode == Fidelity::linearized) {
        double peak = 0.0;
        for (const auto& v : rf.valid_samples()) {
            peak = std::max(peak, std::abs(v));
        }
        const double peak_drive = peak * params.drive_scale;
        if (peak_drive > params.v_pi) {
            throw InvalidArgument("mzm_modulate: peak drive " + std::to_string(peak_drive) + " V exceeds v_pi = "
                                  + std::to_string(params.v_pi) + " V; the linearized model is invalid here");
        }
        const double k = linearized_gain(params) * params.drive_scale;
        out.dc = bias_point_power(params);
        out.envelope.resize(rf.size());
        for (std::size_t i = 0; i < rf.size(); ++i) {
            out.envelope[i] = k * rf.samples[i];
        }
        return out;
    }

    const double fc = rf.center_freq;
    const double obw = rf.valid.size() >= 256 ? measured_occupied_bandwidth(rf) : 0.0;
    const double needed = 2.5 * (std::abs(fc) + 0.5 * obw);
    if (rf.sample_rate < needed) {
        throw InvalidArgument("mzm_modulate: passband mode needs sample_rate >= " + std::to_string(needed)
                              + " Hz for carrier " + std::to_string(fc)
                              + " Hz; use a scaled carrier (e.g. 20 MHz) instead of the RF carrier");
    }
    out.power.resize(rf.size());
    const double w = two_pi * fc / rf.sample_rate;
    for (std::size_t i = 0; i < rf.size(); ++i) {
        const double v = params.drive_scale * (rf.samples[i] * std::polar(1.0, w * static_cast<double>(i))).real();
        out.power[i] = params.input_power * transmission(params, v);
    }
    return out;
}

/// Attenuates and delays an optical power signal; wavelength is preserved.
inline OpticalPowerSignal apply_optical_path(const OpticalPowerSignal& sig, const OpticalPathParams& path)
{
    validate(path);
    const double g = path.linear_gain();
    OpticalPowerSignal out = sig;
    if (sig.representation == Fidelity::linearized) {
        Waveform env(sig.envelope, sig.sample_rate, sig.carrier);
        env.valid = sig.valid;
        const Waveform delayed = apply_fractional_delay(env, path.delay);
        out.dc = g * sig.dc;
        out.envelope = delayed.samples;
        for (auto& v : out.envelope) {
            v *= g;
        }
        out.valid = delayed.valid;
        return out;
    }

    // Delay the fluctuation only so the mean power is carried exactly.
    double mean = 0.0;
    for (std::size_t i = sig.valid.begin; i < sig.valid.end; ++i) {
        mean += sig.power[i];
    }
    mean /= static_cast<double>(std::max<std::size_t>(1, sig.valid.size()));
    CVec ac(sig.power.size());
    for (std::size_t i = 0; i < ac.size(); ++i) {
        ac[i] = cplx(sig.power[i] - mean, 0.0);
    }
    Waveform fluct(std::move(ac), sig.sample_rate, 0.0);
    fluct.valid = sig.valid;
    const Waveform delayed = apply_fractional_delay(fluct, path.delay);
    for (std::size_t i = 0; i < out.power.size(); ++i) {
        out.power[i] = g * (mean + delayed.samples[i].real());
    }
    out.valid = delayed.valid;
    return out;
}

inline constexpr std::size_t downconversion_taps = 255;

/// Square-law detection of wavelength-distinct optical signals.
///
/// Distinct wavelengths beat far outside the detector bandwidth, so the
/// photocurrent is responsivity times the sum of powers. The result is the
/// RF photocurrent as a complex envelope about the signals' carrier.
inline Waveform combine_and_detect(std::span<const OpticalPowerSignal> signals, const PdParams& pd)
{
    validate(pd);
    require(!signals.empty(), "combine_and_detect: need at least one optical signal");
    const OpticalPowerSignal& ref = signals.front();
    SampleRange valid = ref.valid;
    for (std::size_t k = 0; k < signals.size(); ++k) {
        const auto& s = signals[k];
        if (s.representation != ref.representation || s.sample_rate != ref.sample_rate || s.size() != ref.size()
            || s.carrier != ref.carrier) {
            throw InvalidArgument("combine_and_detect: optical signals are not on the same sample grid");
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (std::abs(signals[j].wavelength_nm - s.wavelength_nm) < 1e-6) {
                throw InvalidArgument("combine_and_detect: wavelength collision at " + std::to_string(s.wavelength_nm)
                                      + " nm; coherent beating is not modelled");
            }
        }
        valid = intersect(valid, s.valid);
    }

    const std::size_t n = ref.size();
    const double r = pd.responsivity;
    std::mt19937_64 rng(pd.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    if (ref.representation == Fidelity::linearized) {
        CVec current(n, cplx(0.0, 0.0));
        double dc = 0.0;
        for (const auto& s : signals) {
            dc += r * s.dc;
            for (std::size_t i = 0; i < n; ++i) {
                current[i] += r * s.envelope[i];
            }
        }
        if (!pd.ac_coupled && ref.carrier == 0.0) {
            for (auto& v : current) {
                v += dc;
            }
        }
        if (pd.thermal_noise_density > 0.0) {
            // each quadrature of the envelope carries density^2 * fs
            const double sigma = pd.thermal_noise_density * std::sqrt(ref.sample_rate);
            for (auto& v : current) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                v += sigma * cplx(re, im);
            }
        }
        Waveform out(std::move(current), ref.sample_rate, ref.carrier);
        out.valid = valid;
        return out;
    }

    RVec current(n, 0.0);
    for (const auto& s : signals) {
        for (std::size_t i = 0; i < n; ++i) {
            current[i] += r * s.power[i];
        }
    }
    if (pd.thermal_noise_density > 0.0) {
        const double sigma = pd.thermal_noise_density * std::sqrt(0.5 * ref.sample_rate);
        for (auto& v : current) {
            v += sigma * gauss(rng);
        }
    }
    if (pd.ac_coupled) {
        double mean = 0.0;
        for (std::size_t i = valid.begin; i < valid.end; ++i) {
            mean += current[i];
        }
        mean /= static_cast<double>(std::max<std::size_t>(1, valid.size()));
        for (auto& v : current) {
            v -= mean;
        }
    }

    if (ref.carrier == 0.0) {
        Waveform out(dsp::to_complex(current), ref.sample_rate, 0.0);
        out.valid = valid;
        return out;
    }

    // I/Q downconversion of the real photocurrent to the carrier.
    CVec mixed(n);
    const double w = two_pi * ref.carrier / ref.sample_rate;
    for (std::size_t i = 0; i < n; ++i) {
        mixed[i] = 2.0 * current[i] * std::polar(1.0, -w * static_cast<double>(i));
    }
    const double cutoff = std::min(0.5 * ref.carrier, 0.45 * ref.sample_rate);
    const RVec lp = dsp::lowpass_taps(cutoff, ref.sample_rate, downconversion_taps);
    Waveform out(dsp::convolve_same(mixed, lp), ref.sample_rate, ref.carrier);
    const std::size_t half = downconversion_taps / 2;
    out.valid = SampleRange{std::min(valid.begin + half, n), valid.end > half ? valid.end - half : 0};
    if (out.valid.end < out.valid.begin) {
        out.valid.end = out.valid.begin;
    }
    return out;
}

} // namespace rfim

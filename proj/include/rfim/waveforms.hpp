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

// Signal generators (RRC-shaped QAM signal of interest, FM-modulated
// Gaussian noise interference) and sample-accurate signal arithmetic.

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include "rfim/spectrum.hpp"

namespace rfim {

// ---------------------------------------------------------------------------
// QAM signal of interest
// ---------------------------------------------------------------------------

struct QamConfig {
    int order = 64;
    double symbol_rate = 200e6 / 49.0;
    double rolloff = 0.22;
    std::size_t num_symbols = 2048;
    int filter_span = 64;  // RRC length in symbols; the 0.22-rolloff tails need the length

    double occupied_bandwidth() const { return symbol_rate * (1.0 + rolloff); }

    friend bool operator==(const QamConfig&, const QamConfig&) = default;
};

inline bool is_supported_qam_order(int order)
{
    return order == 4 || order == 16 || order == 64 || order == 256;
}

inline int gray_decode(int g)
{
    int b = g;
    while (g >>= 1) {
        b ^= g;
    }
    return b;
}

/// Square Gray-coded constellation indexed by symbol value, unit mean energy.
/// The upper half of the index bits selects the in-phase level, the lower
/// half the quadrature level; adjacent levels differ in one bit.
inline CVec qam_constellation(int order)
{
    require(is_supported_qam_order(order), "unsupported QAM order " + std::to_string(order));
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    int bits_per_axis = 0;
    while ((1 << bits_per_axis) < m) {
        ++bits_per_axis;
    }
    const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
    CVec points(static_cast<std::size_t>(order));
    for (int idx = 0; idx < order; ++idx) {
        const int i_level = gray_decode(idx >> bits_per_axis);
        const int q_level = gray_decode(idx & (m - 1));
        points[static_cast<std::size_t>(idx)] =
            cplx(2.0 * i_level - (m - 1), 2.0 * q_level - (m - 1)) * scale;
    }
    return points;
}

/// Samples per symbol implied by the rate pair; rejects non-integer ratios.
inline int samples_per_symbol(double sample_rate, double symbol_rate)
{
    require(symbol_rate > 0.0, "symbol rate must be positive");
    const double ratio = sample_rate / symbol_rate;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * ratio) {
        throw InvalidArgument("sample rate " + std::to_string(sample_rate) + " Hz is not an integer multiple of symbol rate "
                              + std::to_string(symbol_rate) + " Hz");
    }
    return static_cast<int>(rounded);
}

/// Generated signal of interest plus the transmitted symbols (EVM reference).
/// Symbol n peaks at sample n * samples_per_symbol.
struct QamSignal {
    Waveform waveform;
    CVec symbols;
    std::vector<int> symbol_indices;
    int samples_per_symbol = 0;
};

inline QamSignal generate_qam_soi(const QamConfig& cfg, std::uint64_t seed, double sample_rate, double center_freq)
{
    require(is_supported_qam_order(cfg.order), "unsupported QAM order " + std::to_string(cfg.order)
                                                   + " (expected 4, 16, 64 or 256)");
    require(cfg.rolloff >= 0.0 && cfg.rolloff <= 1.0, "QAM rolloff must lie in [0, 1]");
    require(cfg.num_symbols >= 64, "QAM signal needs at least 64 symbols");
    require(cfg.filter_span >= 2 && cfg.filter_span % 2 == 0, "QAM filter span must be an even number >= 2");
    require(sample_rate >= 4.0 * cfg.symbol_rate, "sample rate must be at least 4x the symbol rate");
    const int sps = samples_per_symbol(sample_rate, cfg.symbol_rate);

    const CVec points = qam_constellation(cfg.order);
    int bits = 0;
    while ((1 << bits) < cfg.order) {
        ++bits;
    }
    std::mt19937_64 rng(seed);
    QamSignal out;
    out.samples_per_symbol = sps;
    out.symbols.resize(cfg.num_symbols);
    out.symbol_indices.resize(cfg.num_symbols);
    for (std::size_t n = 0; n < cfg.num_symbols; ++n) {
        const int idx = static_cast<int>(rng() >> (64 - bits));
        out.symbol_indices[n] = idx;
        out.symbols[n] = points[static_cast<std::size_t>(idx)];
    }

    CVec impulses(cfg.num_symbols * static_cast<std::size_t>(sps), cplx(0.0, 0.0));
    for (std::size_t n = 0; n < cfg.num_symbols; ++n) {
        impulses[n * static_cast<std::size_t>(sps)] = out.symbols[n];
    }
    const RVec pulse = dsp::rrc_taps(cfg.rolloff, sps, cfg.filter_span);
    CVec shaped = dsp::convolve_same(impulses, pulse);
    const double norm = 1.0 / std::sqrt(mean_power(shaped));
    for (auto& v : shaped) {
        v *= norm;
    }
    out.waveform = Waveform(std::move(shaped), sample_rate, center_freq);
    return out;
}

// ---------------------------------------------------------------------------
// FM-modulated Gaussian noise interference
// ---------------------------------------------------------------------------

struct FmNoiseConfig {
    double modulating_noise_bandwidth = 5e6;
    /// Peak deviation scale in Hz; empty means "calibrate against
    /// target_occupied_bandwidth".
    std::optional<double> freq_deviation;
    double target_occupied_bandwidth = 40e6;
    std::uint64_t seed = 2;

    friend bool operator==(const FmNoiseConfig&, const FmNoiseConfig&) = default;
};

namespace detail {

    /// Unit-variance Gaussian noise low-pass filtered to `bandwidth`.
    inline RVec modulating_noise(double bandwidth, std::uint64_t seed, double sample_rate, std::size_t n)
    {
        auto ntaps = static_cast<std::size_t>(std::ceil(20.0 * sample_rate / bandwidth));
        ntaps = std::clamp<std::size_t>(ntaps | 1u, 65, 4097);
        const RVec h = dsp::lowpass_taps(bandwidth, sample_rate, ntaps);
        double h_energy = 0.0;
        for (double v : h) {
            h_energy += v * v;
        }

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        CVec white(n + ntaps - 1);
        for (auto& v : white) {
            v = cplx(gauss(rng), 0.0);
        }
        const CVec filtered = dsp::convolve(white, dsp::to_complex(h));
        // keep the fully-settled part only
        RVec out(n);
        const double norm = 1.0 / std::sqrt(h_energy);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = filtered[i + ntaps - 1].real() * norm;
        }
        return out;
    }

    inline Waveform fm_from_noise(const RVec& noise, double deviation, double sample_rate, double center_freq)
    {
        CVec s(noise.size());
        double phase = 0.0;
        const double k = two_pi * deviation / sample_rate;
        for (std::size_t i = 0; i < noise.size(); ++i) {
            phase += k * noise[i];
            s[i] = std::polar(1.0, phase);
        }
        return Waveform(std::move(s), sample_rate, center_freq);
    }

    inline std::size_t measurement_segment(std::size_t n)
    {
        std::size_t seg = default_welch_segment;
        while (seg > 64 && 2 * seg > n) {
            seg /= 2;
        }
        return seg;
    }

    inline void check_fm_config(const FmNoiseConfig& cfg, double sample_rate)
    {
        require(cfg.modulating_noise_bandwidth > 0.0, "FM noise: modulating bandwidth must be > 0");
        require(cfg.target_occupied_bandwidth > 0.0, "FM noise: target occupied bandwidth must be > 0");
        require(!cfg.freq_deviation || *cfg.freq_deviation >= 0.0, "FM noise: frequency deviation must be >= 0");
        require(sample_rate >= 4.0 * cfg.target_occupied_bandwidth,
                "FM noise: sample rate must be at least 4x the target occupied bandwidth");
        require(cfg.modulating_noise_bandwidth < 0.5 * sample_rate, "FM noise: modulating bandwidth above Nyquist");
    }

} // namespace detail

/// 99%-occupied bandwidth of `w`, measured with the default Welch estimator.
inline double measured_occupied_bandwidth(const Waveform& w, double fraction = 0.99)
{
    const Spectrum s = welch_psd(w, detail::measurement_segment(w.valid.size()), default_welch_overlap);
    return occupied_bandwidth(s, fraction);
}

/// Finds the deviation whose measured 99% occupied bandwidth equals the
/// target, by bisection. Carson's rule only seeds the bracket.
inline double calibrate_fm_deviation(const FmNoiseConfig& cfg, double sample_rate, double center_freq,
                                     std::size_t num_samples)
{
    detail::check_fm_config(cfg, sample_rate);
    require(num_samples >= 1024, "FM calibration needs at least 1024 samples");
    const RVec noise = detail::modulating_noise(cfg.modulating_noise_bandwidth, cfg.seed, sample_rate, num_samples);
    const double target = cfg.target_occupied_bandwidth;
    auto obw = [&](double dev) {
        return measured_occupied_bandwidth(detail::fm_from_noise(noise, dev, sample_rate, center_freq));
    };

    const double carson = std::max(0.5 * target - cfg.modulating_noise_bandwidth, 0.05 * target);
    double lo = 0.25 * carson;
    double hi = 2.0 * carson;
    for (int i = 0; i < 20 && obw(lo) > target; ++i) {
        lo *= 0.5;
    }
    for (int i = 0; i < 20 && obw(hi) < target; ++i) {
        hi *= 2.0;
    }
    for (int it = 0; it < 60 && (hi - lo) > 1e-7 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (obw(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// exp(j 2 pi dev * integral n), n unit-variance low-passed Gaussian noise.
/// Calibrates the deviation first when the config leaves it empty.
inline Waveform generate_fm_noise(const FmNoiseConfig& cfg, double sample_rate, double center_freq,
                                  std::size_t num_samples)
{
    detail::check_fm_config(cfg, sample_rate);
    require(num_samples > 0, "FM noise: num_samples must be > 0");
    const double dev = cfg.freq_deviation ? *cfg.freq_deviation
                                          : calibrate_fm_deviation(cfg, sample_rate, center_freq, num_samples);
    const RVec noise = detail::modulating_noise(cfg.modulating_noise_bandwidth, cfg.seed, sample_rate, num_samples);
    return detail::fm_from_noise(noise, dev, sample_rate, center_freq);
}

// ---------------------------------------------------------------------------
// Delay and mixing
// ---------------------------------------------------------------------------

inline constexpr int fractional_delay_taps = 64;

/// Delays an RF signal by `delay` seconds: x(t - delay).
///
/// The envelope is shifted with a 64-tap Blackman-windowed sinc (exact shift
/// for integer sample delays) and rotated by the carrier phase
/// exp(-j 2 pi center_freq delay). Samples not covered by the full filter
/// support are dropped from the valid range.
inline Waveform apply_fractional_delay(const Waveform& w, double delay)
{
    require(w.sample_rate > 0.0, "fractional delay: sample rate must be positive");
    require(!w.samples.empty(), "fractional delay: empty waveform");
    if (delay == 0.0) {
        return w;
    }
    if (!(std::abs(delay) < 0.25 * w.duration())) {
        throw InvalidArgument("fractional delay: |delay| = " + std::to_string(delay)
                              + " s exceeds a quarter of the buffer duration");
    }

    const auto n = static_cast<std::ptrdiff_t>(w.size());
    const double d = delay * w.sample_rate;
    const double rounded = std::round(d);
    const cplx rot = w.center_freq != 0.0 ? std::polar(1.0, -two_pi * w.center_freq * delay) : cplx(1.0, 0.0);

    Waveform out;
    out.sample_rate = w.sample_rate;
    out.center_freq = w.center_freq;
    out.samples.assign(w.size(), cplx(0.0, 0.0));

    auto clamp_idx = [n](std::ptrdiff_t v) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, n)); };
    const auto vb = static_cast<std::ptrdiff_t>(w.valid.begin);
    const auto ve = static_cast<std::ptrdiff_t>(w.valid.end);

    if (std::abs(d - rounded) <= 1e-9) {
        const auto k = static_cast<std::ptrdiff_t>(rounded);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, k); i < std::min(n, n + k); ++i) {
            out.samples[static_cast<std::size_t>(i)] = rot * w.samples[static_cast<std::size_t>(i - k)];
        }
        out.valid = SampleRange{clamp_idx(vb + k), clamp_idx(ve + k)};
        return out;
    }

    const auto n0 = static_cast<std::ptrdiff_t>(std::floor(d));
    const double frac = d - static_cast<double>(n0);
    constexpr std::ptrdiff_t lo_tap = -(fractional_delay_taps / 2 - 1);
    constexpr std::ptrdiff_t hi_tap = fractional_delay_taps / 2;
    std::array<double, fractional_delay_taps> taps{};
    double sum = 0.0;
    for (std::ptrdiff_t m = lo_tap; m <= hi_tap; ++m) {
        const double t = static_cast<double>(m) - frac;
        const double v = dsp::sinc(t) * dsp::blackman(t, fractional_delay_taps);
        taps[static_cast<std::size_t>(m - lo_tap)] = v;
        sum += v;
    }
    for (auto& v : taps) {
        v /= sum;
    }

    for (std::ptrdiff_t i = 0; i < n; ++i) {
        cplx acc(0.0, 0.0);
        const std::ptrdiff_t base = i - n0;
        const std::ptrdiff_t m_lo = std::max(lo_tap, base - (n - 1));
        const std::ptrdiff_t m_hi = std::min(hi_tap, base);
        for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) {
            acc += taps[static_cast<std::size_t>(m - lo_tap)] * w.samples[static_cast<std::size_t>(base - m)];
        }
        out.samples[static_cast<std::size_t>(i)] = rot * acc;
    }
    out.valid = SampleRange{clamp_idx(vb + n0 + hi_tap), clamp_idx(ve + n0 + lo_tap)};
    if (out.valid.end < out.valid.begin) {
        out.valid.end = out.valid.begin;
    }
    return out;
}

/// soi_gain * soi + int_gain * interferer(t - int_delay).
inline Waveform mix_at_receiver(const Waveform& soi, const Waveform& interferer, double soi_gain, double int_gain,
                                double int_delay)
{
    require_same_grid(soi, interferer, "mix_at_receiver");
    require(soi_gain >= 0.0 && int_gain >= 0.0, "mix_at_receiver: gains must be >= 0");
    if (int_gain == 0.0) {
        return soi_gain * soi;
    }
    return soi_gain * soi + int_gain * apply_fractional_delay(interferer, int_delay);
}

/// Signal-to-interference ratio in dB for unit-power inputs.
inline double sir_db(double soi_gain, double int_gain)
{
    return 20.0 * std::log10(soi_gain / int_gain);
}

} // namespace rfim

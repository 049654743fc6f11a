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

#include <numeric>

#include "rfim/dsp.hpp"

namespace rfim {

/// Averaged power spectrum on an absolute RF frequency axis.
///
/// `bin_power[k]` is the power (full-scale units, i.e. |amplitude|^2) in
/// bin k, so the bins sum to the mean power of the analysed signal.
/// `psd_db` is the same quantity in dB.
struct Spectrum {
    RVec freqs;
    RVec psd_db;
    RVec bin_power;
    double resolution_bandwidth = 0.0;
    double bin_width = 0.0;
    double center_freq = 0.0;

    std::size_t size() const noexcept { return freqs.size(); }
    double lower_edge() const { return freqs.front() - 0.5 * bin_width; }
    double upper_edge() const { return freqs.back() + 0.5 * bin_width; }

    double total_power() const { return std::accumulate(bin_power.begin(), bin_power.end(), 0.0); }

    friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

inline constexpr std::size_t default_welch_segment = 4096;
inline constexpr double default_welch_overlap = 0.5;

/// Hann-windowed Welch periodogram over the valid region of `w`.
inline Spectrum welch_psd(const Waveform& w,
                          std::size_t segment_len = default_welch_segment,
                          double overlap_fraction = default_welch_overlap)
{
    require(dsp::is_pow2(segment_len), "welch_psd: segment length must be a power of two");
    require(overlap_fraction >= 0.0 && overlap_fraction < 1.0, "welch_psd: overlap must lie in [0, 1)");
    require(w.sample_rate > 0.0, "welch_psd: sample rate must be positive");
    const auto x = w.valid_samples();
    require(segment_len <= x.size(), "welch_psd: segment longer than signal (" + std::to_string(segment_len) + " > "
                                         + std::to_string(x.size()) + ")");

    const std::size_t n = segment_len;
    const RVec win = dsp::hann_periodic(n);
    double win_energy = 0.0;
    double win_sum = 0.0;
    for (double v : win) {
        win_energy += v * v;
        win_sum += v;
    }
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - overlap_fraction))));
    const std::size_t n_seg = 1 + (x.size() - n) / step;

    Eigen::FFT<double> engine;
    RVec acc(n, 0.0);
    CVec seg(n);
    CVec spec;
    for (std::size_t s = 0; s < n_seg; ++s) {
        const std::size_t off = s * step;
        for (std::size_t i = 0; i < n; ++i) {
            seg[i] = x[off + i] * win[i];
        }
        engine.fwd(spec, seg);
        for (std::size_t k = 0; k < n; ++k) {
            acc[k] += std::norm(spec[k]);
        }
    }

    Spectrum out;
    out.center_freq = w.center_freq;
    out.bin_width = w.sample_rate / static_cast<double>(n);
    out.resolution_bandwidth = w.sample_rate * win_energy / (win_sum * win_sum);
    out.freqs.resize(n);
    out.psd_db.resize(n);
    out.bin_power.resize(n);
    const double scale = 1.0 / (static_cast<double>(n_seg) * static_cast<double>(n) * win_energy);
    for (std::size_t i = 0; i < n; ++i) {
        // fftshift: output bin i holds DFT bin (i + n/2) mod n
        const std::size_t k = (i + n / 2) % n;
        out.freqs[i] = w.center_freq + (static_cast<double>(i) - static_cast<double>(n / 2)) * out.bin_width;
        out.bin_power[i] = acc[k] * scale;
        out.psd_db[i] = to_db(out.bin_power[i]);
    }
    return out;
}

/// Linear power between f_lo and f_hi, treating each bin as uniformly
/// spread over its width. No range checking.
inline double integrate_band(const Spectrum& s, double f_lo, double f_hi)
{
    double acc = 0.0;
    const double half = 0.5 * s.bin_width;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double lo = std::max(f_lo, s.freqs[i] - half);
        const double hi = std::min(f_hi, s.freqs[i] + half);
        if (hi > lo) {
            acc += s.bin_power[i] * (hi - lo) / s.bin_width;
        }
    }
    return acc;
}

/// Band power in dB full scale.
inline double band_power(const Spectrum& s, double f_lo, double f_hi)
{
    require(!s.freqs.empty(), "band_power: empty spectrum");
    require(f_lo < f_hi, "band_power: f_lo must be below f_hi");
    const double tol = 1e-9 * s.bin_width;
    if (f_lo < s.lower_edge() - tol || f_hi > s.upper_edge() + tol) {
        throw InvalidArgument("band_power: band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi)
                              + "] Hz lies outside the spectrum span");
    }
    return to_db(integrate_band(s, f_lo, f_hi));
}

inline double power_centroid(const Spectrum& s)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += s.freqs[i] * s.bin_power[i];
        den += s.bin_power[i];
    }
    return den > 0.0 ? num / den : s.center_freq;
}

/// Width of the smallest band, symmetric about the power centroid, that
/// holds `fraction` of the total power.
inline double occupied_bandwidth(const Spectrum& s, double fraction = 0.99)
{
    require(!s.freqs.empty(), "occupied_bandwidth: empty spectrum");
    require(fraction > 0.0 && fraction < 1.0, "occupied_bandwidth: fraction must lie in (0, 1)");
    const double total = s.total_power();
    if (total <= 0.0) {
        return 0.0;
    }
    const double c = power_centroid(s);
    double lo = 0.0;
    double hi = s.upper_edge() - s.lower_edge();
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (integrate_band(s, c - mid, c + mid) >= fraction * total) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 2.0 * hi;
}

} // namespace rfim

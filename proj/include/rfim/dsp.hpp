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

// Low-level DSP building blocks: FFT, convolution, windows and FIR design.

#include <unsupported/Eigen/FFT>

#include "rfim/core.hpp"

namespace rfim::dsp {

inline std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

inline bool is_pow2(std::size_t n)
{
    return n != 0 && (n & (n - 1)) == 0;
}

/// Forward DFT, no scaling.
inline CVec fft(const CVec& x)
{
    Eigen::FFT<double> engine;
    CVec out;
    engine.fwd(out, x);
    return out;
}

/// Inverse DFT with 1/N scaling.
inline CVec ifft(const CVec& X)
{
    Eigen::FFT<double> engine;
    CVec out;
    engine.inv(out, X);
    return out;
}

inline double sinc(double x)
{
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    return std::sin(pi * x) / (pi * x);
}

/// Blackman window evaluated at continuous offset t from the centre of a
/// window of total length `length`. Zero outside |t| > length / 2.
inline double blackman(double t, double length)
{
    if (std::abs(t) > 0.5 * length) {
        return 0.0;
    }
    const double x = two_pi * t / length;
    return 0.42 + 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}

/// Periodic (DFT-even) Hann window.
inline RVec hann_periodic(std::size_t n)
{
    RVec w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}

/// Full linear convolution, length x.size() + h.size() - 1.
inline CVec convolve(std::span<const cplx> x, std::span<const cplx> h)
{
    if (x.empty() || h.empty()) {
        return {};
    }
    const std::size_t n_out = x.size() + h.size() - 1;
    if (x.size() * h.size() <= (1u << 16) || h.size() <= 16) {
        CVec y(n_out, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (std::size_t k = 0; k < h.size(); ++k) {
                y[i + k] += x[i] * h[k];
            }
        }
        return y;
    }
    const std::size_t n_fft = next_pow2(n_out);
    CVec xp(n_fft, cplx(0.0, 0.0));
    CVec hp(n_fft, cplx(0.0, 0.0));
    std::copy(x.begin(), x.end(), xp.begin());
    std::copy(h.begin(), h.end(), hp.begin());
    CVec X = fft(xp);
    const CVec H = fft(hp);
    for (std::size_t i = 0; i < n_fft; ++i) {
        X[i] *= H[i];
    }
    CVec y = ifft(X);
    y.resize(n_out);
    return y;
}

inline CVec to_complex(std::span<const double> h)
{
    CVec out(h.size());
    std::transform(h.begin(), h.end(), out.begin(), [](double v) { return cplx(v, 0.0); });
    return out;
}

/// Convolution with an odd-length filter centred on its middle tap; output
/// has the same length as x and no group delay.
inline CVec convolve_same(std::span<const cplx> x, std::span<const double> h)
{
    require(h.size() % 2 == 1, "convolve_same: filter length must be odd");
    const CVec hc = to_complex(h);
    CVec full = convolve(x, hc);
    const std::size_t half = h.size() / 2;
    return CVec(full.begin() + static_cast<std::ptrdiff_t>(half),
                full.begin() + static_cast<std::ptrdiff_t>(half + x.size()));
}

/// Blackman-windowed sinc low-pass filter, unit DC gain, odd length.
inline RVec lowpass_taps(double cutoff_hz, double sample_rate, std::size_t ntaps)
{
    require(ntaps % 2 == 1, "lowpass_taps: ntaps must be odd");
    require(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate, "lowpass_taps: cutoff outside (0, fs/2)");
    const double fc = cutoff_hz / sample_rate;
    const double half = static_cast<double>(ntaps - 1) / 2.0;
    RVec h(ntaps);
    double sum = 0.0;
    for (std::size_t i = 0; i < ntaps; ++i) {
        const double t = static_cast<double>(i) - half;
        h[i] = 2.0 * fc * sinc(2.0 * fc * t) * blackman(t, static_cast<double>(ntaps));
        sum += h[i];
    }
    for (auto& v : h) {
        v /= sum;
    }
    return h;
}

/// Root-raised-cosine pulse sampled at `sps` samples per symbol spanning
/// `span_symbols` symbols, normalised to unit energy.
inline RVec rrc_taps(double rolloff, int sps, int span_symbols)
{
    require(rolloff >= 0.0 && rolloff <= 1.0, "rrc_taps: rolloff must lie in [0, 1]");
    require(sps >= 1 && span_symbols >= 2, "rrc_taps: invalid sps/span");
    const int half = span_symbols * sps / 2;
    const double a = rolloff;
    RVec h(static_cast<std::size_t>(2 * half + 1));
    double energy = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double t = static_cast<double>(i) / sps;
        double v = 0.0;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - a + 4.0 * a / pi;
        } else if (a > 0.0 && std::abs(std::abs(4.0 * a * t) - 1.0) < 1e-9) {
            v = a / std::sqrt(2.0)
                * ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * a)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * a)));
        } else {
            v = (std::sin(pi * t * (1.0 - a)) + 4.0 * a * t * std::cos(pi * t * (1.0 + a)))
                / (pi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t)));
        }
        h[static_cast<std::size_t>(i + half)] = v;
        energy += v * v;
    }
    const double norm = 1.0 / std::sqrt(energy);
    for (auto& v : h) {
        v *= norm;
    }
    return h;
}

} // namespace rfim::dsp

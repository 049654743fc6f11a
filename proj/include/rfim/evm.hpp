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

// Data-aided QAM demodulation and EVM measurement.

#include <set>

#include "rfim/waveforms.hpp"

namespace rfim {

/// Result of a data-aided EVM measurement.
///
/// EVM is the RMS error vector normalised by the RMS of the reference
/// symbols, in percent, after a single least-squares complex gain has been
/// removed from the received symbols.
struct EvmReport {
    double evm_rms_percent = 0.0;
    RVec error_magnitudes;  // per symbol, relative to reference RMS
    CVec constellation;     // gain-normalised received symbols
    CVec reference;         // transmitted symbols aligned with `constellation`
    std::size_t first_symbol = 0;
    std::size_t symbols_used = 0;
    int order = 0;
    cplx gain{0.0, 0.0};
    double timing_offset = 0.0;  // samples, relative to the transmit grid
    double lock_correlation = 0.0;

    friend bool operator==(const EvmReport&, const EvmReport&) = default;
};

inline constexpr double timing_lock_threshold = 0.05;

inline EvmReport demodulate_qam(const Waveform& rf, const QamConfig& cfg, std::span<const cplx> tx_symbols)
{
    require(is_supported_qam_order(cfg.order), "demodulate_qam: unsupported QAM order");
    const int sps = samples_per_symbol(rf.sample_rate, cfg.symbol_rate);
    const auto usps = static_cast<std::size_t>(sps);
    const std::size_t n_sym = tx_symbols.size();
    require(n_sym >= 64, "demodulate_qam: need at least 64 reference symbols");
    require(rf.valid.size() >= 64 * usps, "demodulate_qam: waveform shorter than 64 symbol durations");

    CVec masked(rf.size(), cplx(0.0, 0.0));
    for (std::size_t i = rf.valid.begin; i < rf.valid.end; ++i) {
        masked[i] = rf.samples[i];
    }
    const RVec pulse = dsp::rrc_taps(cfg.rolloff, sps, cfg.filter_span);
    const std::size_t half = pulse.size() / 2;
    Waveform mf(dsp::convolve_same(masked, pulse), rf.sample_rate, 0.0);
    mf.valid = SampleRange{std::min(rf.valid.begin + half, rf.size()), rf.valid.end > half ? rf.valid.end - half : 0};

    const auto edge = static_cast<std::size_t>(cfg.filter_span);
    require(n_sym > 2 * edge + 16, "demodulate_qam: too few symbols after edge exclusion");
    const std::ptrdiff_t max_lag = std::min<std::ptrdiff_t>(8 * sps, static_cast<std::ptrdiff_t>(n_sym * usps / 8));

    auto correlate = [&](const Waveform& y, std::ptrdiff_t lag, double* rho) {
        cplx c(0.0, 0.0);
        double ey = 0.0;
        double ex = 0.0;
        for (std::size_t n = edge; n < n_sym - edge; ++n) {
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n * usps) + lag;
            if (idx < 0 || !y.valid.contains(static_cast<std::size_t>(idx))) {
                continue;
            }
            const cplx v = y.samples[static_cast<std::size_t>(idx)];
            c += v * std::conj(tx_symbols[n]);
            ey += std::norm(v);
            ex += std::norm(tx_symbols[n]);
        }
        *rho = (ey > 0.0 && ex > 0.0) ? std::abs(c) / std::sqrt(ey * ex) : 0.0;
        return std::abs(c);
    };

    std::ptrdiff_t best_lag = 0;
    double best_rho = -1.0;
    std::vector<double> mags(static_cast<std::size_t>(2 * max_lag + 1));
    for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
        double rho = 0.0;
        mags[static_cast<std::size_t>(lag + max_lag)] = correlate(mf, lag, &rho);
        if (rho > best_rho) {
            best_rho = rho;
            best_lag = lag;
        }
    }
    if (best_rho < timing_lock_threshold) {
        throw Error("demodulate_qam: timing lock failure (normalised correlation " + std::to_string(best_rho) + ")");
    }

    // Sub-sample timing from a parabola through the correlation peak.
    double frac = 0.0;
    if (best_lag > -max_lag && best_lag < max_lag) {
        const double a = mags[static_cast<std::size_t>(best_lag - 1 + max_lag)];
        const double b = mags[static_cast<std::size_t>(best_lag + max_lag)];
        const double c = mags[static_cast<std::size_t>(best_lag + 1 + max_lag)];
        const double den = a - 2.0 * b + c;
        if (den < 0.0) {
            frac = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
        }
    }
    const Waveform sampled = std::abs(frac) > 1e-3 ? apply_fractional_delay(mf, -frac / rf.sample_rate) : mf;

    EvmReport rep;
    rep.order = cfg.order;
    rep.timing_offset = static_cast<double>(best_lag) + frac;
    rep.lock_correlation = best_rho;
    CVec rx;
    bool first = true;
    for (std::size_t n = edge; n < n_sym - edge; ++n) {
        const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n * usps) + best_lag;
        if (idx < 0 || !sampled.valid.contains(static_cast<std::size_t>(idx))) {
            continue;
        }
        if (first) {
            rep.first_symbol = n;
            first = false;
        }
        rx.push_back(sampled.samples[static_cast<std::size_t>(idx)]);
        rep.reference.push_back(tx_symbols[n]);
    }
    require(rx.size() >= 32, "demodulate_qam: fewer than 32 usable symbols");

    cplx num(0.0, 0.0);
    double ref_energy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += rx[i] * std::conj(rep.reference[i]);
        ref_energy += std::norm(rep.reference[i]);
    }
    rep.gain = num / ref_energy;
    require(std::abs(rep.gain) > 0.0, "demodulate_qam: zero received signal");

    const double ref_rms = std::sqrt(ref_energy / static_cast<double>(rx.size()));
    double err_energy = 0.0;
    rep.constellation.resize(rx.size());
    rep.error_magnitudes.resize(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const cplx z = rx[i] / rep.gain;
        rep.constellation[i] = z;
        const double e = std::abs(z - rep.reference[i]);
        rep.error_magnitudes[i] = e / ref_rms;
        err_energy += e * e;
    }
    rep.symbols_used = rx.size();
    rep.evm_rms_percent = 100.0 * std::sqrt(err_energy / ref_energy);
    return rep;
}

/// Number of distinct constellation points that received symbols snap to
/// under nearest-point assignment.
inline std::size_t count_constellation_clusters(std::span<const cplx> points, int order)
{
    const CVec ideal = qam_constellation(order);
    std::set<std::size_t> hit;
    for (const auto& p : points) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < ideal.size(); ++k) {
            const double d = std::norm(p - ideal[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        hit.insert(best);
    }
    return hit.size();
}

} // namespace rfim

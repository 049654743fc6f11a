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

// Automated cancellation tuning: correlation delay search, least-squares
// (Wiener) reference weights, and the mapping from a complex weight to
// modulator bias, optical attenuation and delay.

#include <Eigen/Dense>

#include "rfim/link.hpp"

namespace rfim {

// ---------------------------------------------------------------------------
// Delay estimation
// ---------------------------------------------------------------------------

/// Outcome of a correlation delay search. `locked` is false when no
/// correlation peak stands out of the noise floor; `delay` is meaningless
/// then.
struct DelayEstimate {
    bool locked = false;
    double delay = 0.0;          // s, positive when `received` lags `reference`
    double delay_samples = 0.0;
    double peak_correlation = 0.0;  // |c| / sqrt(E_received E_reference)
    double peak_to_median = 0.0;

    friend bool operator==(const DelayEstimate&, const DelayEstimate&) = default;
};

inline constexpr double lock_peak_to_median = 8.0;
inline constexpr double lock_min_correlation = 0.01;

inline DelayEstimate estimate_delay(const Waveform& received, const Waveform& reference, double search_window)
{
    require(received.sample_rate == reference.sample_rate && received.size() == reference.size(),
            "estimate_delay: signals must share a sample grid");
    require(search_window >= 0.0, "estimate_delay: search window must be >= 0");
    const std::size_t n = received.size();
    const auto max_lag = static_cast<std::ptrdiff_t>(std::floor(search_window * received.sample_rate + 1e-9));
    require(max_lag <= static_cast<std::ptrdiff_t>(n / 4), "estimate_delay: search window exceeds buffer / 4");

    const std::size_t n_fft = dsp::next_pow2(2 * n);
    CVec r(n_fft, cplx(0.0, 0.0));
    CVec f(n_fft, cplx(0.0, 0.0));
    double er = 0.0;
    double ef = 0.0;
    for (std::size_t i = received.valid.begin; i < received.valid.end; ++i) {
        r[i] = received.samples[i];
        er += std::norm(r[i]);
    }
    for (std::size_t i = reference.valid.begin; i < reference.valid.end; ++i) {
        f[i] = reference.samples[i];
        ef += std::norm(f[i]);
    }
    DelayEstimate est;
    if (er <= 0.0 || ef <= 0.0) {
        return est;
    }
    CVec spec = dsp::fft(r);
    const CVec fspec = dsp::fft(f);
    for (std::size_t k = 0; k < n_fft; ++k) {
        spec[k] *= std::conj(fspec[k]);
    }
    const CVec xc = dsp::ifft(spec);
    auto at = [&](std::ptrdiff_t lag) {
        const auto idx = static_cast<std::size_t>((lag % static_cast<std::ptrdiff_t>(n_fft) + n_fft) % n_fft);
        return std::abs(xc[idx]);
    };

    std::ptrdiff_t best = -max_lag;
    double peak = -1.0;
    for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
        const double v = at(lag);
        // earliest lag wins ties; equal up to FFT round-off counts as a tie
        if (v > peak * (1.0 + 1e-12)) {
            peak = v;
            best = lag;
        }
    }

    const auto floor_span = static_cast<std::ptrdiff_t>(n / 4);
    RVec floor_vals;
    floor_vals.reserve(static_cast<std::size_t>(2 * floor_span + 1));
    for (std::ptrdiff_t lag = -floor_span; lag <= floor_span; ++lag) {
        floor_vals.push_back(at(lag));
    }
    auto mid = floor_vals.begin() + static_cast<std::ptrdiff_t>(floor_vals.size() / 2);
    std::nth_element(floor_vals.begin(), mid, floor_vals.end());
    const double median = *mid;

    est.peak_correlation = peak / std::sqrt(er * ef);
    est.peak_to_median = median > 0.0 ? peak / median : std::numeric_limits<double>::infinity();
    est.locked = est.peak_to_median >= lock_peak_to_median && est.peak_correlation >= lock_min_correlation;

    double frac = 0.0;
    if (best > -max_lag && best < max_lag) {
        const double a = at(best - 1);
        const double c = at(best + 1);
        const double den = a - 2.0 * peak + c;
        if (den < 0.0) {
            frac = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
        }
        if (std::abs(frac) < 1e-9) {
            frac = 0.0;
        }
    }
    est.delay_samples = static_cast<double>(best) + frac;
    est.delay = est.delay_samples / received.sample_rate;
    return est;
}

// ---------------------------------------------------------------------------
// Least-squares weights
// ---------------------------------------------------------------------------

struct WeightSolution {
    std::vector<cplx> weights;
    bool regularized = false;  // Gram matrix was rank deficient
    double residual_power = 0.0;
    double received_power = 0.0;
    SampleRange region;
};

inline constexpr double gram_ridge = 1e-12;
inline constexpr double gram_rank_tolerance = 1e-10;

/// Minimises mean |received - sum_k w_k ref_k|^2 over the common valid
/// region (optionally narrowed to `restrict_to`) via the normal equations.
/// References must already be aligned.
inline WeightSolution solve_weights_aligned(const Waveform& received, std::span<const Waveform> refs,
                                            SampleRange restrict_to = {0, static_cast<std::size_t>(-1)})
{
    require(!refs.empty() && refs.size() <= max_reference_channels, "solve_weights: need 1 to 8 references");
    SampleRange region = intersect(received.valid, restrict_to);
    for (const auto& r : refs) {
        require(r.sample_rate == received.sample_rate && r.size() == received.size(),
                "solve_weights: references must share the received sample grid");
        region = intersect(region, r.valid);
    }
    require(!region.empty(), "solve_weights: no common valid samples");

    const auto k = static_cast<Eigen::Index>(refs.size());
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(k, k);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& ra = refs[static_cast<std::size_t>(a)].samples;
        for (std::size_t i = region.begin; i < region.end; ++i) {
            rhs(a) += std::conj(ra[i]) * received.samples[i];
        }
        for (Eigen::Index b = a; b < k; ++b) {
            const auto& rb = refs[static_cast<std::size_t>(b)].samples;
            cplx acc(0.0, 0.0);
            for (std::size_t i = region.begin; i < region.end; ++i) {
                acc += std::conj(ra[i]) * rb[i];
            }
            gram(a, b) = acc;
            gram(b, a) = std::conj(acc);
        }
    }

    WeightSolution sol;
    sol.region = region;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
    const Eigen::VectorXd lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(k);
    if (lmax <= 0.0) {
        sol.regularized = true;
    } else if (lambda.minCoeff() <= gram_rank_tolerance * lmax) {
        // pseudo-inverse: minimum-norm solution on the well-conditioned subspace
        sol.regularized = true;
        const Eigen::MatrixXcd& v = eig.eigenvectors();
        const Eigen::VectorXcd proj = v.adjoint() * rhs;
        Eigen::VectorXcd scaled = Eigen::VectorXcd::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            if (lambda(i) > gram_rank_tolerance * lmax) {
                scaled(i) = proj(i) / lambda(i);
            }
        }
        w = v * scaled;
    } else {
        const double ridge = gram_ridge * gram.trace().real() / static_cast<double>(k);
        const Eigen::MatrixXcd reg = gram + ridge * Eigen::MatrixXcd::Identity(k, k);
        w = reg.ldlt().solve(rhs);
    }

    sol.weights.resize(refs.size());
    for (Eigen::Index a = 0; a < k; ++a) {
        sol.weights[static_cast<std::size_t>(a)] = w(a);
    }
    double res = 0.0;
    double rec = 0.0;
    for (std::size_t i = region.begin; i < region.end; ++i) {
        cplx e = received.samples[i];
        rec += std::norm(e);
        for (std::size_t a = 0; a < refs.size(); ++a) {
            e -= sol.weights[a] * refs[a].samples[i];
        }
        res += std::norm(e);
    }
    sol.residual_power = res / static_cast<double>(region.size());
    sol.received_power = rec / static_cast<double>(region.size());
    return sol;
}

/// Delays each reference by its estimated delay (a true RF delay, carrier
/// phase included) and solves for the least-squares weights.
inline WeightSolution solve_weights(const Waveform& received, std::span<const Waveform> refs,
                                    std::span<const double> delays)
{
    require(refs.size() == delays.size(), "solve_weights: one delay per reference required");
    std::vector<Waveform> aligned;
    aligned.reserve(refs.size());
    for (std::size_t k = 0; k < refs.size(); ++k) {
        aligned.push_back(apply_fractional_delay(refs[k], delays[k]));
    }
    return solve_weights_aligned(received, aligned);
}

// ---------------------------------------------------------------------------
// Weight -> device settings
// ---------------------------------------------------------------------------

class UnrealizableWeight : public Error {
public:
    UnrealizableWeight(double requested, double max_magnitude)
        : Error("weight magnitude " + std::to_string(requested) + " exceeds the achievable maximum "
                + std::to_string(max_magnitude)),
          requested_(requested), max_magnitude_(max_magnitude) {}

    double requested() const noexcept { return requested_; }
    double max_magnitude() const noexcept { return max_magnitude_; }

private:
    double requested_;
    double max_magnitude_;
};

/// Largest weight magnitude a channel offers: quadrature slope, full drive,
/// zero attenuation, collimator loss included. Units: W per unit reference
/// amplitude.
inline double nominal_path_gain(const MzmParams& mzm, const OpticalPathParams& path)
{
    return quadrature_gain(mzm) * mzm.drive_scale * from_db(-path.excess_loss_db);
}

/// Maps a complex weight, expressed relative to the reference delayed by
/// `path.delay`, onto modulator bias, attenuation and fine delay.
///
/// The sign of the real part picks the quadrature point (+v_pi/2 gives a
/// negative slope, i.e. intensity inversion); the magnitude sets the optical
/// attenuation; the remaining phase, at most a quarter carrier cycle, is
/// taken up by a delay trim at `carrier`.
inline ChannelSettings weights_to_settings(cplx weight, const MzmParams& mzm, const OpticalPathParams& path,
                                           double carrier)
{
    validate(mzm);
    validate(path);
    const double g0 = nominal_path_gain(mzm, path);
    const double mag = std::abs(weight);
    if (mag > g0 * (1.0 + 1e-9)) {
        throw UnrealizableWeight(mag, g0);
    }
    if (mag == 0.0) {
        return {0.0, 0.0, path.delay};
    }
    const double sign = weight.real() >= 0.0 ? 1.0 : -1.0;
    ChannelSettings out;
    out.bias_voltage = sign > 0.0 ? -0.5 * mzm.v_pi : 0.5 * mzm.v_pi;
    out.attenuation_db = std::max(0.0, -10.0 * std::log10(mag / g0));
    out.delay = path.delay;
    if (carrier > 0.0) {
        const double phase = std::arg(weight * sign);  // within (-pi/2, pi/2]
        out.delay -= phase / (two_pi * carrier);
        if (out.delay < 0.0) {
            out.delay += 1.0 / carrier;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// End-to-end tuning
// ---------------------------------------------------------------------------

struct ChannelTune {
    bool active = false;            // locked and tuned
    DelayEstimate estimate;         // raw correlation estimate
    double delay = 0.0;             // refined alignment delay, s
    cplx weight{0.0, 0.0};          // applied cancelling weight
    ChannelSettings settings;

    friend bool operator==(const ChannelTune&, const ChannelTune&) = default;
};

struct TuneResult {
    std::vector<ChannelTune> channels;
    double residual_interference_power_db = 0.0;  // replayed through the optics
    double predicted_residual_db = 0.0;           // from the solved weights
    bool converged = false;
    bool regularized = false;
    std::vector<std::string> warnings;

    /// Settings to drive the post-cancellation chain with: tuned settings
    /// for active channels, null bias otherwise.
    std::vector<ChannelSettings> applied_settings(const Scenario& s) const
    {
        std::vector<ChannelSettings> out;
        for (std::size_t k = 0; k < s.reference_channels.size(); ++k) {
            const bool on = converged && k < channels.size() && channels[k].active;
            out.push_back(on ? channels[k].settings : zeroed_settings(s.reference_channels[k]));
        }
        return out;
    }

    friend bool operator==(const TuneResult&, const TuneResult&) = default;
};

namespace detail {

    /// Golden-section minimisation of a unimodal f on [lo, hi].
    template <typename F>
    double golden_minimize(F&& f, double lo, double hi, double tol)
    {
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo;
        double b = hi;
        double c = b - g * (b - a);
        double d = a + g * (b - a);
        double fc = f(c);
        double fd = f(d);
        while (b - a > tol) {
            if (fc <= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        return 0.5 * (a + b);
    }

} // namespace detail

inline constexpr double delay_refine_tolerance = 1e-4;  // samples

/// Automated tuning: correlation delay per channel, joint least-squares
/// weights with sub-sample delay refinement, mapping to device settings,
/// and replay of the interference alone through the optics to measure the
/// achieved residual.
inline TuneResult tune(const LinkSignals& link)
{
    const Scenario& s = link.scenario;
    const double fs = s.sim.sample_rate;
    const double r = s.pd.responsivity;
    const std::vector<ChannelSettings> zeroed = zeroed_settings(s);

    TuneResult result;
    result.channels.resize(s.reference_channels.size());
    for (std::size_t k = 0; k < s.reference_channels.size(); ++k) {
        result.channels[k].settings = configured_settings(s.reference_channels[k]);
    }

    // Observable at the photodiode with every reference weight zeroed,
    // referred back to optical power.
    const Waveform observed = (1.0 / r) * detect(link, link.received, zeroed);

    std::vector<std::size_t> active;
    try {
        for (std::size_t k = 0; k < s.reference_channels.size() && k < link.interferers.size(); ++k) {
            auto& ch = result.channels[k];
            ch.estimate = estimate_delay(observed, link.interferers[k], s.sim.search_window);
            if (!ch.estimate.locked) {
                continue;
            }
            if (ch.estimate.delay < 0.0) {
                result.warnings.push_back("channel " + std::to_string(k)
                                          + ": interference leads its reference; negative delay not realizable");
                continue;
            }
            ch.delay = ch.estimate.delay;
            active.push_back(k);
        }
    } catch (const Error& e) {
        throw StageError("estimate_delay", e.what());
    }
    if (active.empty()) {
        result.converged = false;
        result.residual_interference_power_db = 0.0;
        result.predicted_residual_db = 0.0;
        return result;
    }

    std::vector<Waveform> aligned;
    WeightSolution sol;
    try {
        for (std::size_t k : active) {
            aligned.push_back(apply_fractional_delay(link.interferers[k], result.channels[k].delay));
        }
        // Residual power is smooth in each envelope delay (the complex weight
        // absorbs carrier phase), so refine each delay around the
        // correlation peak; two coordinate sweeps suffice for near-orthogonal
        // references.
        const double max_delay = 0.25 * link.interferers.front().duration() * (1.0 - 1e-9);
        // fixed region so the cost is continuous in the trial delays
        SampleRange fixed = observed.valid;
        for (const auto& a : aligned) {
            fixed = intersect(fixed, a.valid);
        }
        fixed.begin = std::min(fixed.begin + 4, fixed.end);
        fixed.end = fixed.end >= fixed.begin + 4 ? fixed.end - 4 : fixed.begin;
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (std::size_t j = 0; j < active.size(); ++j) {
                auto& ch = result.channels[active[j]];
                const Waveform& ref = link.interferers[active[j]];
                auto cost = [&](double tau) {
                    std::vector<Waveform> trial = aligned;
                    trial[j] = apply_fractional_delay(ref, tau);
                    return solve_weights_aligned(observed, trial, fixed).residual_power;
                };
                const double lo = std::max(0.0, ch.delay - 1.0 / fs);
                const double hi = std::min(max_delay, ch.delay + 1.0 / fs);
                ch.delay = detail::golden_minimize(cost, lo, hi, delay_refine_tolerance / fs);
                aligned[j] = apply_fractional_delay(ref, ch.delay);
            }
        }
        sol = solve_weights_aligned(observed, aligned, fixed);
    } catch (const Error& e) {
        throw StageError("solve_weights", e.what());
    }
    result.regularized = sol.regularized;
    if (sol.regularized) {
        result.warnings.push_back("reference Gram matrix is rank deficient; regularized solve used");
    }

    std::vector<ChannelSettings> tuned = zeroed;
    try {
        for (std::size_t j = 0; j < active.size(); ++j) {
            const std::size_t k = active[j];
            auto& ch = result.channels[k];
            ch.weight = -sol.weights[j];
            OpticalPathParams path = s.reference_channels[k].path;
            path.delay = ch.delay;
            ch.settings = weights_to_settings(ch.weight, s.reference_channels[k].modulator, path, link.carrier);
            ch.active = true;
            tuned[k] = ch.settings;
        }
    } catch (const Error& e) {
        throw StageError("weights_to_settings", e.what());
    }

    // Replay the interference alone, before and after.
    const Waveform before = (1.0 / r) * detect(link, link.interference_at_rx, zeroed);
    const Waveform after = (1.0 / r) * detect(link, link.interference_at_rx, tuned);
    Waveform predicted = before;
    for (std::size_t j = 0; j < active.size(); ++j) {
        predicted = predicted + result.channels[active[j]].weight * aligned[j];
    }
    const SampleRange region = intersect(intersect(before.valid, after.valid), predicted.valid);
    const double p0 = mean_power(before, region);
    result.residual_interference_power_db = to_db(mean_power(after, region) / p0);
    result.predicted_residual_db = to_db(mean_power(predicted, region) / p0);
    result.converged = true;

    if (result.residual_interference_power_db > 0.0) {
        // never amplify: fall back to the zero weight
        result.warnings.push_back("tuned settings increased interference; reverting to zero weights");
        for (std::size_t k : active) {
            result.channels[k].active = false;
            result.channels[k].weight = cplx(0.0, 0.0);
            result.channels[k].settings = configured_settings(s.reference_channels[k]);
        }
        result.converged = false;
        result.residual_interference_power_db = 0.0;
    }
    return result;
}

inline TuneResult tune(const Scenario& scenario)
{
    try {
        (void)validate(scenario);
    } catch (const Error& e) {
        throw StageError("validate", e.what());
    }
    return tune(generate_link(scenario));
}

} // namespace rfim

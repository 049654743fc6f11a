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


#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rfim/canceller.hpp"

using namespace rfim;
using Catch::Approx;

namespace {

constexpr double fs = 200e6;
constexpr double fc = 2.4e9;

Waveform fm(std::uint64_t seed, std::size_t n = 32768, double carrier = fc)
{
    FmNoiseConfig cfg;
    cfg.seed = seed;
    cfg.freq_deviation = 7.57e6;
    return generate_fm_noise(cfg, fs, carrier, n);
}

Waveform qam(std::uint64_t seed, std::size_t symbols = 700, double carrier = fc)
{
    QamConfig cfg;
    cfg.num_symbols = symbols;
    return generate_qam_soi(cfg, seed, fs, carrier).waveform;
}

Scenario single_interferer()
{
    Scenario s;
    s.name = "single";
    s.sim.duration = 200e-6;
    s.interferers.push_back({});
    s.reference_channels.push_back({});
    return s;
}

} // namespace

TEST_CASE("delay estimation", "[canceller][delay]")
{
    const Waveform ref = fm(3);

    SECTION("a reference against itself has zero delay")
    {
        const DelayEstimate e = estimate_delay(ref, ref, 1e-6);
        CHECK(e.locked);
        CHECK(e.delay == 0.0);
        CHECK(e.peak_correlation == Approx(1.0).epsilon(1e-9));
    }
    SECTION("a known 7.3-sample delay is recovered within 0.1 sample")
    {
        const Waveform rx = apply_fractional_delay(ref, 7.3 / fs);
        const DelayEstimate e = estimate_delay(rx, ref, 1e-6);
        CHECK(e.locked);
        CHECK(e.delay_samples == Approx(7.3).margin(0.1));
        CHECK(e.delay == Approx(7.3 / fs).margin(0.1 / fs));
    }
    SECTION("20 dB in-band SNR keeps the error below 0.1 sample")
    {
        for (std::uint64_t seed = 100; seed < 108; ++seed) {
            const Waveform r = fm(seed);
            const double truth = 3.0 + 0.37 * static_cast<double>(seed - 100);
            Waveform rx = apply_fractional_delay(r, truth / fs);
            // white noise at 0.01 of the signal power inside the 40 MHz band
            const CVec noise = oracle::white_noise(rx.size(), seed + 1000, 0.01 * fs / 40e6);
            for (std::size_t i = 0; i < rx.size(); ++i) {
                rx.samples[i] += noise[i];
            }
            const DelayEstimate e = estimate_delay(rx, r, 1e-6);
            INFO("seed " << seed);
            CHECK(e.locked);
            CHECK(e.delay_samples == Approx(truth).margin(0.1));
        }
    }
    SECTION("the integer peak agrees with direct correlation")
    {
        Waveform s = qam(8, 700);
        s.samples.resize(ref.size());
        s.valid = {0, ref.size()};
        const Waveform rx = apply_fractional_delay(ref, 11.0 / fs) + 0.8 * s;
        const Waveform r2(ref.samples, fs, fc);
        const DelayEstimate e = estimate_delay(rx, r2, 0.2e-6);
        CHECK(std::lround(e.delay_samples) == oracle::direct_xcorr_peak(rx.samples, r2.samples, 40));
    }
    SECTION("SOI alone does not lock")
    {
        const Waveform soi = qam(5, 700);
        Waveform r(ref.samples, fs, fc);
        r.samples.resize(soi.size());
        r.valid = {0, soi.size()};
        const DelayEstimate e = estimate_delay(soi, r, 1e-6);
        CHECK_FALSE(e.locked);
    }
    SECTION("equal peaks resolve to the earliest lag")
    {
        CVec imp(4096, cplx(0.0, 0.0));
        imp[1000] = 1.0;
        CVec two(4096, cplx(0.0, 0.0));
        two[1003] = 1.0;
        two[1009] = 1.0;
        const DelayEstimate e = estimate_delay(Waveform(two, fs, 0.0), Waveform(imp, fs, 0.0), 50 / fs);
        CHECK(e.delay_samples == 3.0);
    }
    SECTION("preconditions")
    {
        CHECK_THROWS_AS(estimate_delay(ref, ref, ref.duration() / 2), InvalidArgument);
        const Waveform other(CVec(100, cplx(1.0, 0.0)), fs, fc);
        CHECK_THROWS_AS(estimate_delay(ref, other, 1e-7), InvalidArgument);
    }
}

TEST_CASE("least-squares weights: constructed ground truth", "[canceller][weights]")
{
    const Waveform ref = fm(3, 20000);

    SECTION("received equal to the reference gives w = 1")
    {
        const std::vector<Waveform> refs{ref};
        const WeightSolution sol = solve_weights(ref, refs, std::vector<double>{0.0});
        CHECK(std::abs(sol.weights[0] - cplx(1.0, 0.0)) < 1e-9);
        CHECK_FALSE(sol.regularized);
    }
    SECTION("SOI plus an inverted half-amplitude reference gives w = -0.5")
    {
        // The SOI leaks into the estimate with variance P_soi * sum(R_ref) / N;
        // sum(R_ref) is about 10 for this FM noise, so 1e6 samples put 2% at 3 sigma.
        const std::size_t n = 1000000;
        const Waveform big = fm(3, n);
        Waveform s = qam(7, n / 49 + 1);
        s.samples.resize(n);
        s.valid = {0, n};
        const Waveform rx = s + std::polar(0.5, std::numbers::pi) * big;
        const std::vector<Waveform> refs{big};
        const WeightSolution sol = solve_weights(rx, refs, std::vector<double>{0.0});
        CHECK(std::abs(sol.weights[0] - cplx(-0.5, 0.0)) / 0.5 < 0.02);
    }
    SECTION("two interferers, two references")
    {
        const std::size_t n = 500000;
        const Waveform r1 = fm(11, n);
        const Waveform r2 = fm(12, n);
        const Waveform soi = [&] {
            Waveform w = qam(7, n / 49 + 1);
            w.samples.resize(n);
            w.valid = {0, n};
            return w;
        }();
        const cplx g1 = std::polar(0.45, 0.7);
        const cplx g2 = std::polar(0.30, -2.1);
        const double d1 = 23.7e-9;
        const double d2 = 41.3e-9;
        const Waveform interference = g1 * apply_fractional_delay(r1, d1) + g2 * apply_fractional_delay(r2, d2);
        const Waveform rx = 0.5 * soi + interference;
        const std::vector<Waveform> refs{r1, r2};
        const std::vector<double> delays{d1, d2};
        const WeightSolution sol = solve_weights(rx, refs, delays);
        CHECK(std::abs(sol.weights[0] - g1) / std::abs(g1) < 0.02);
        CHECK(std::abs(sol.weights[1] - g2) / std::abs(g2) < 0.02);
        // residual interference after subtracting the weighted references
        const Waveform a1 = apply_fractional_delay(r1, d1);
        const Waveform a2 = apply_fractional_delay(r2, d2);
        const Waveform left = interference + (-sol.weights[0]) * a1 + (-sol.weights[1]) * a2;
        const SampleRange r = left.valid;
        const double res = oracle::mean_power(left.samples, r.begin, r.end)
                           / oracle::mean_power(interference.samples, r.begin, r.end);
        CHECK(10 * std::log10(res) <= -30.0);
    }
}

TEST_CASE("duplicate references are solved with regularization", "[canceller][weights]")
{
    const Waveform ref = fm(3, 8192);
    const Waveform rx = cplx(-0.4, 0.2) * ref;
    const std::vector<Waveform> refs{ref, ref};
    const WeightSolution sol = solve_weights(rx, refs, std::vector<double>{0.0, 0.0});
    CHECK(sol.regularized);
    CHECK(std::isfinite(sol.weights[0].real()));
    CHECK(std::abs(sol.weights[0] + sol.weights[1] - cplx(-0.4, 0.2)) < 1e-9);
    CHECK(std::abs(sol.weights[0] - sol.weights[1]) < 1e-9);  // minimum-norm split
    CHECK(sol.residual_power < 1e-18);
}

TEST_CASE("least-squares weights: properties", "[canceller][weights]")
{
    const std::size_t n = 4096;
    const Waveform r1 = fm(21, n);
    const Waveform r2 = fm(22, n);
    const Waveform soi = [&] {
        Waveform w = qam(9, n / 49 + 1);
        w.samples.resize(n);
        w.valid = {0, n};
        return w;
    }();
    const Waveform rx = 0.5 * soi + cplx(0.3, -0.35) * r1 + cplx(-0.2, 0.1) * r2;
    const std::vector<Waveform> refs{r1, r2};
    const WeightSolution sol = solve_weights_aligned(rx, refs);

    SECTION("perturbing any weight by 1% increases the residual")
    {
        for (std::size_t k = 0; k < 2; ++k) {
            for (cplx f : {cplx(1.01, 0.0), cplx(0.99, 0.0), std::polar(1.0, 0.01), std::polar(1.0, -0.01)}) {
                std::vector<cplx> w = sol.weights;
                w[k] *= f;
                const double j = oracle::ls_cost_direct(rx.samples, {r1.samples, r2.samples}, w, 0, n);
                REQUIRE(j > sol.residual_power);
            }
        }
    }
    SECTION("scaling a reference by c scales its weight by 1/c")
    {
        const cplx c(2.5, -1.5);
        const std::vector<Waveform> scaled{c * r1, r2};
        const WeightSolution s2 = solve_weights_aligned(rx, scaled);
        CHECK(std::abs(s2.weights[0] - sol.weights[0] / c) < 1e-9 * std::abs(sol.weights[0] / c));
        CHECK(std::abs(s2.weights[1] - sol.weights[1]) < 1e-9);
        CHECK(s2.residual_power == Approx(sol.residual_power).epsilon(1e-9));
    }
    SECTION("the residual agrees with direct evaluation")
    {
        CHECK(sol.residual_power
              == Approx(oracle::ls_cost_direct(rx.samples, {r1.samples, r2.samples}, sol.weights, 0, n)).epsilon(1e-9));
    }
    SECTION("the SOI survives cancellation")
    {
        // long buffer: projection of the SOI on the references is small
        const std::size_t m = 200000;
        const Waveform l1 = fm(31, m);
        const Waveform s = [&] {
            Waveform w = qam(9, m / 49 + 1);
            w.samples.resize(m);
            w.valid = {0, m};
            return w;
        }();
        const Waveform x = 0.5 * s + cplx(0.4, 0.3) * l1;
        const std::vector<Waveform> one{l1};
        const WeightSolution ws = solve_weights_aligned(x, one);
        const Waveform y = x + (-ws.weights[0]) * l1;
        // data-aided estimate of the SOI power left in the output
        cplx num(0.0, 0.0);
        double den = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            num += std::conj(s.samples[i]) * y.samples[i];
            den += std::norm(s.samples[i]);
        }
        const double soi_after = std::norm(num / den) * oracle::mean_power(s.samples);
        const double soi_before = 0.25 * oracle::mean_power(s.samples);
        CHECK(std::abs(10 * std::log10(soi_after / soi_before)) < 0.2);
    }
}

TEST_CASE("least-squares weights match a brute-force grid search", "[canceller][oracle]")
{
    const std::size_t n = 4096;
    const double step = 1e-3;
    SECTION("one channel")
    {
        for (std::uint64_t seed : {41, 42, 43}) {
            const Waveform ref = fm(seed, n);
            const Waveform s = [&] {
                Waveform w = qam(seed, n / 49 + 1);
                w.samples.resize(n);
                w.valid = {0, n};
                return w;
            }();
            const cplx truth = std::polar(0.3 + 0.2 * static_cast<double>(seed - 41), -1.0 + 0.9 * static_cast<double>(seed - 41));
            const Waveform rx = 0.5 * s + truth * ref;
            const std::vector<Waveform> refs{ref};
            const WeightSolution sol = solve_weights_aligned(rx, refs);
            const oracle::LsCost cost(rx.samples, {ref.samples}, 0, n);
            const auto best = oracle::grid_search_1ch(cost, 1.0, step);
            INFO("seed " << seed);
            CHECK(std::abs(std::abs(sol.weights[0]) - best.magnitude) <= step);
            CHECK(std::abs(oracle::angle_diff(std::arg(sol.weights[0]), best.phase)) <= step);
        }
    }
    SECTION("two channels")
    {
        const Waveform r1 = fm(51, n);
        const Waveform r2 = fm(52, n);
        const Waveform s = [&] {
            Waveform w = qam(5, n / 49 + 1);
            w.samples.resize(n);
            w.valid = {0, n};
            return w;
        }();
        const Waveform rx = 0.5 * s + std::polar(0.45, 0.7) * r1 + std::polar(0.3, -2.1) * r2;
        const std::vector<Waveform> refs{r1, r2};
        const WeightSolution sol = solve_weights_aligned(rx, refs);
        const oracle::LsCost cost(rx.samples, {r1.samples, r2.samples}, 0, n);
        const auto best = oracle::grid_search_2ch(cost, 1.0, step);
        for (std::size_t k = 0; k < 2; ++k) {
            INFO("channel " << k);
            CHECK(std::abs(std::abs(sol.weights[k]) - best[k].magnitude) <= step);
            CHECK(std::abs(oracle::angle_diff(std::arg(sol.weights[k]), best[k].phase)) <= step);
        }
    }
}

TEST_CASE("weights to device settings", "[canceller][settings]")
{
    const MzmParams mzm;
    OpticalPathParams path;
    path.excess_loss_db = 1.0;
    const double g0 = nominal_path_gain(mzm, path);

    SECTION("full-magnitude inverting weight")
    {
        const ChannelSettings s = weights_to_settings(cplx(-g0, 0.0), mzm, path, fc);
        CHECK(s.bias_voltage == Approx(mzm.v_pi / 2));  // positive bias gives the negative slope
        CHECK(s.attenuation_db == Approx(0.0).margin(1e-12));
        CHECK(s.delay == Approx(0.0).margin(1e-18));
        const ChannelSettings t = weights_to_settings(cplx(g0, 0.0), mzm, path, fc);
        CHECK(t.bias_voltage == Approx(-mzm.v_pi / 2));
    }
    SECTION("half magnitude")
    {
        // optical attenuation acts on power, and the detected RF amplitude is
        // proportional to optical power: halving the weight is 3.0103 dB
        const ChannelSettings s = weights_to_settings(cplx(-g0 / 2, 0.0), mzm, path, fc);
        CHECK(s.attenuation_db == Approx(3.0103).margin(0.01));
    }
    SECTION("zero weight nulls the modulator")
    {
        const ChannelSettings s = weights_to_settings(cplx(0.0, 0.0), mzm, path, fc);
        CHECK(s.bias_voltage == 0.0);
    }
    SECTION("unrealizable magnitudes report the achievable maximum")
    {
        try {
            (void)weights_to_settings(cplx(0.0, 2 * g0), mzm, path, fc);
            FAIL("expected UnrealizableWeight");
        } catch (const UnrealizableWeight& e) {
            CHECK(e.max_magnitude() == Approx(g0));
            CHECK(e.requested() == Approx(2 * g0));
        }
    }
    SECTION("settings replayed through the optics reproduce the weight")
    {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> mag(0.05, 1.0);
        std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
        QamConfig cfg;
        cfg.num_symbols = 200;
        const Waveform ref = 0.5 * generate_qam_soi(cfg, 4, fs, fc).waveform;
        const PdParams pd;
        for (int trial = 0; trial < 20; ++trial) {
            const cplx w = std::polar(g0 * mag(rng), ph(rng));
            OpticalPathParams p = path;
            p.delay = 10e-9;
            const ChannelSettings s = weights_to_settings(w, mzm, p, fc);
            MzmParams m = mzm;
            m.bias_voltage = s.bias_voltage;
            OpticalPathParams q = p;
            q.attenuation_db = s.attenuation_db;
            q.delay = s.delay;
            const auto opt = apply_optical_path(mzm_modulate(ref, m, Fidelity::linearized), q);
            const Waveform out = (1.0 / pd.responsivity) * combine_and_detect(std::vector<OpticalPowerSignal>{opt}, pd);
            // effective weight relative to the reference delayed by the nominal path delay
            const std::vector<Waveform> refs{apply_fractional_delay(ref, p.delay)};
            const WeightSolution fit = solve_weights_aligned(out, refs);
            INFO("trial " << trial << " w " << w);
            CHECK(std::abs(fit.weights[0] - w) / std::abs(w) < 0.01);
        }
    }
}

TEST_CASE("tuning a single-interferer link", "[canceller][tune]")
{
    const Scenario s = single_interferer();
    const TuneResult t = tune(s);
    REQUIRE(t.converged);
    REQUIRE(t.channels.size() == 1);
    CHECK(t.channels[0].active);
    CHECK(t.residual_interference_power_db <= -30.0);
    CHECK(std::abs(t.residual_interference_power_db - t.predicted_residual_db) <= 0.5);
    CHECK(t.channels[0].delay == Approx(23.7e-9).margin(0.1 / fs));
    CHECK(std::abs(t.channels[0].settings.bias_voltage) == Approx(2.5));
    CHECK(t.channels[0].settings.attenuation_db >= 0.0);
}

TEST_CASE("tuning never amplifies interference", "[canceller][tune]")
{
    for (double gain : {0.05, 0.3, 0.9}) {
        Scenario s = single_interferer();
        s.interferers[0].gain = gain;
        const TuneResult t = tune(s);
        INFO("gain " << gain);
        CHECK(t.residual_interference_power_db <= 0.0);
    }
}

TEST_CASE("no interference: tuning does not converge and leaves settings alone", "[canceller][tune]")
{
    Scenario s = single_interferer();
    s.interferers[0].gain = 0.0;
    s.reference_channels[0].modulator.bias_voltage = 1.7;
    s.reference_channels[0].path.attenuation_db = 2.0;
    const TuneResult t = tune(s);
    CHECK_FALSE(t.converged);
    CHECK(t.residual_interference_power_db == 0.0);
    CHECK_FALSE(t.channels[0].active);
    CHECK(t.channels[0].settings == configured_settings(s.reference_channels[0]));
}

TEST_CASE("tune rejects a scenario without reference channels", "[canceller][tune]")
{
    Scenario s = single_interferer();
    s.reference_channels.clear();
    CHECK_THROWS_AS(tune(s), StageError);
}

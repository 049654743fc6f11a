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
#include "rfim/photonics.hpp"

using namespace rfim;
using Catch::Approx;

namespace {

constexpr double fs = 200e6;

MzmParams ideal_mzm()
{
    MzmParams p;
    p.insertion_loss_db = 0.0;
    p.extinction_ratio_db = std::numeric_limits<double>::infinity();
    return p;
}

/// Complex noise low-passed to +-2.5 MHz, scaled to `power`.
CVec bl_noise(std::size_t n, std::uint64_t seed, double power = 1.0)
{
    const CVec x = oracle::white_noise(n, seed);
    CVec y = dsp::convolve_same(x, dsp::lowpass_taps(2.5e6, fs, 255));
    const double p = oracle::mean_power(y);
    for (auto& v : y) {
        v *= std::sqrt(power / p);
    }
    return y;
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b, SampleRange r)
{
    double worst = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

double rms(std::span<const cplx> a, SampleRange r)
{
    return std::sqrt(oracle::mean_power(a, r.begin, r.end));
}

} // namespace

TEST_CASE("MZM transfer follows the cosine law and stays within its bounds", "[photonics]")
{
    for (double er : {20.0, 30.0, std::numeric_limits<double>::infinity()}) {
        for (double bias : {-7.0, -2.5, 0.0, 1.3, 2.5, 5.0}) {
            MzmParams p;
            p.extinction_ratio_db = er;
            p.bias_voltage = bias;
            for (int i = -2000; i <= 2000; ++i) {
                const double v = 0.01 * i;
                const double t = transmission(p, v);
                REQUIRE(t <= p.t_max() * (1.0 + 1e-15));
                REQUIRE(t >= p.t_floor() * (1.0 - 1e-12));
                REQUIRE(p.input_power * t
                        == Approx(oracle::mzm_power(p.input_power, p.insertion_loss_db, er, p.v_pi, bias, v))
                               .epsilon(1e-12)
                               .margin(1e-18));
            }
        }
    }
}

TEST_CASE("quadrature bias with no drive transmits half the input power", "[photonics]")
{
    MzmParams p = ideal_mzm();
    p.bias_voltage = p.v_pi / 2;
    const Waveform silent(CVec(4096, cplx(0.0, 0.0)), fs, 20e6);
    const OpticalPowerSignal out = mzm_modulate(silent, p, Fidelity::passband);
    for (double v : out.power) {
        REQUIRE(v == Approx(p.input_power / 2).epsilon(1e-12));
    }
    CHECK(bias_point_power(p) == Approx(p.input_power / 2).epsilon(1e-12));
    const OpticalPowerSignal lin = mzm_modulate(silent, p, Fidelity::linearized);
    CHECK(lin.dc == Approx(p.input_power / 2).epsilon(1e-12));
}

TEST_CASE("linearized gain", "[photonics]")
{
    MzmParams p;
    p.bias_voltage = 0.0;
    CHECK(linearized_gain(p) == 0.0);
    p.bias_voltage = p.v_pi / 2;
    const double expect = -std::numbers::pi * p.input_power * p.t_max() * (1 - p.epsilon()) / (2 * p.v_pi);
    CHECK(linearized_gain(p) == Approx(expect).epsilon(1e-14));
    MzmParams q = p;
    q.bias_voltage = -p.v_pi / 2;
    CHECK(linearized_gain(q) == Approx(-expect).epsilon(1e-14));
    CHECK(quadrature_gain(p) == Approx(-expect).epsilon(1e-14));

    SECTION("matches a finite difference of the transfer curve")
    {
        for (double bias : {0.4, 1.3, 2.5, -1.7, 3.9}) {
            MzmParams m;
            m.bias_voltage = bias;
            const double h = 1e-3 * m.v_pi;
            const auto power = [&](double v) {
                return oracle::mzm_power(m.input_power, m.insertion_loss_db, m.extinction_ratio_db, m.v_pi, bias, v);
            };
            const double fd = (power(h) - power(-h)) / (2 * h);
            INFO("bias " << bias);
            CHECK(linearized_gain(m) == Approx(fd).epsilon(1e-3));
        }
    }
}

TEST_CASE("opposite quadrature biases give opposite RF outputs", "[photonics]")
{
    const CVec x = bl_noise(8192, 5, 0.01);
    const Waveform rf(x, fs, 2.4e9);
    MzmParams plus;
    plus.bias_voltage = plus.v_pi / 2;
    MzmParams minus = plus;
    minus.bias_voltage = -plus.v_pi / 2;

    SECTION("linearized")
    {
        const auto a = mzm_modulate(rf, plus, Fidelity::linearized);
        const auto b = mzm_modulate(rf, minus, Fidelity::linearized);
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < a.envelope.size(); ++i) {
            worst = std::max(worst, std::abs(a.envelope[i] + b.envelope[i]));
            scale = std::max(scale, std::abs(a.envelope[i]));
        }
        CHECK(worst <= 1e-12 * scale);
        CHECK(a.dc == Approx(b.dc));
    }
    SECTION("passband")
    {
        const Waveform low(x, fs, 20e6);
        const auto a = mzm_modulate(low, plus, Fidelity::passband);
        const auto b = mzm_modulate(low, minus, Fidelity::passband);
        const double mean_a = std::accumulate(a.power.begin(), a.power.end(), 0.0) / static_cast<double>(a.power.size());
        const double mean_b = std::accumulate(b.power.begin(), b.power.end(), 0.0) / static_cast<double>(b.power.size());
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < a.power.size(); ++i) {
            worst = std::max(worst, std::abs((a.power[i] - mean_a) + (b.power[i] - mean_b)));
            scale = std::max(scale, std::abs(a.power[i] - mean_a));
        }
        // the cosine law is exactly odd about either quadrature point
        CHECK(worst <= 1e-9 * scale);
    }
}

TEST_CASE("passband small-tone response matches the linearized slope", "[photonics]")
{
    // tone with a whole number of cycles in the analysis window
    const std::size_t n = 20000;
    const double f0 = 20e6;
    for (double bias_frac : {0.5, 0.3}) {
        MzmParams p;
        p.bias_voltage = bias_frac * p.v_pi;
        p.drive_scale = 0.01 * p.v_pi;  // unit-amplitude tone -> 0.01 v_pi peak
        const Waveform rf(CVec(n, cplx(1.0, 0.0)), fs, f0);
        const auto out = mzm_modulate(rf, p, Fidelity::passband);
        const double fund = oracle::real_line_amplitude(out.power, f0, fs, 0, n);
        const double second = oracle::real_line_amplitude(out.power, 2 * f0, fs, 0, n);
        const double lin = std::abs(linearized_gain(p)) * p.drive_scale;
        INFO("bias " << bias_frac << " v_pi");
        CHECK(fund == Approx(lin).epsilon(0.01));
        CHECK(20 * std::log10(second / fund) <= -40.0);
    }
}

TEST_CASE("passband optical power is never negative", "[photonics]")
{
    MzmParams p;
    p.drive_scale = 2.0 * p.v_pi;  // heavy overdrive
    const Waveform rf(bl_noise(8192, 9), fs, 20e6);
    for (double bias : {-2.5, 0.0, 2.5, 5.0}) {
        p.bias_voltage = bias;
        const auto out = mzm_modulate(rf, p, Fidelity::passband);
        CHECK(*std::min_element(out.power.begin(), out.power.end()) >= p.input_power * p.t_floor() * (1 - 1e-12));
    }
}

TEST_CASE("modulator preconditions", "[photonics]")
{
    MzmParams p;
    p.drive_scale = 6.0;  // unit amplitude exceeds v_pi = 5
    const Waveform rf(CVec(1024, cplx(1.0, 0.0)), fs, 2.4e9);
    CHECK_THROWS_AS(mzm_modulate(rf, p, Fidelity::linearized), InvalidArgument);
    p.drive_scale = 1.0;
    CHECK_NOTHROW(mzm_modulate(rf, p, Fidelity::linearized));
    try {
        (void)mzm_modulate(rf, p, Fidelity::passband);
        FAIL("passband at 2.4 GHz with 200 MHz sampling must be rejected");
    } catch (const InvalidArgument& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("scaled carrier"));
    }
    p.v_pi = 0.0;
    CHECK_THROWS_AS(mzm_modulate(rf, p, Fidelity::linearized), InvalidArgument);
}

TEST_CASE("optical path", "[photonics]")
{
    MzmParams m;
    const Waveform rf(bl_noise(8192, 21, 0.01), fs, 2.4e9);
    const auto sig = mzm_modulate(rf, m, Fidelity::linearized);

    SECTION("zero attenuation and delay is the identity")
    {
        const auto out = apply_optical_path(sig, OpticalPathParams{});
        CHECK(out.envelope == sig.envelope);
        CHECK(out.dc == sig.dc);
        CHECK(out.wavelength_nm == sig.wavelength_nm);
    }
    SECTION("3.0103 dB halves the power")
    {
        OpticalPathParams path;
        path.attenuation_db = 3.0103;
        const auto out = apply_optical_path(sig, path);
        CHECK(out.dc / sig.dc == Approx(0.5).margin(1e-6));
        CHECK(std::abs(out.envelope[100]) / std::abs(sig.envelope[100]) == Approx(0.5).margin(1e-6));
        const Waveform low(bl_noise(8192, 22, 0.01), fs, 20e6);
        const auto pb = mzm_modulate(low, m, Fidelity::passband);
        const auto pout = apply_optical_path(pb, path);
        for (std::size_t i = 0; i < pb.power.size(); i += 97) {
            REQUIRE(pout.power[i] / pb.power[i] == Approx(0.5).margin(1e-6));
        }
    }
    SECTION("12.5 ns at 200 MHz is a 2.5-sample delay")
    {
        const double f = 3e6;
        const Waveform tone(oracle::tone(8192, f, fs, 0.1), fs, 0.0);
        const auto s = mzm_modulate(tone, m, Fidelity::linearized);
        OpticalPathParams path;
        path.delay = 12.5e-9;
        const auto out = apply_optical_path(s, path);
        double worst = 0.0;
        for (std::size_t i = out.valid.begin; i < out.valid.end; ++i) {
            const double expect = std::arg(s.envelope[0]) + 2 * std::numbers::pi * f * (static_cast<double>(i) - 2.5) / fs;
            worst = std::max(worst, std::abs(oracle::angle_diff(std::arg(out.envelope[i]), expect)));
        }
        CHECK(worst < 1e-4);
        // and it agrees with delaying the RF before modulation
        const auto pre = mzm_modulate(apply_fractional_delay(tone, 12.5e-9), m, Fidelity::linearized);
        CHECK(max_abs_diff(pre.envelope, out.envelope, out.valid) < 1e-12);
    }
    SECTION("negative attenuation is rejected")
    {
        OpticalPathParams path;
        path.attenuation_db = -1.0;
        CHECK_THROWS_AS(apply_optical_path(sig, path), InvalidArgument);
    }
}

TEST_CASE("photodetection", "[photonics]")
{
    const PdParams pd;
    MzmParams plus;
    MzmParams minus;
    minus.bias_voltage = -plus.bias_voltage;

    SECTION("a constant input is removed by AC coupling")
    {
        const Waveform silent(CVec(4096, cplx(0.0, 0.0)), fs, 20e6);
        for (Fidelity mode : {Fidelity::linearized, Fidelity::passband}) {
            const std::vector<OpticalPowerSignal> in{mzm_modulate(silent, plus, mode)};
            const Waveform out = combine_and_detect(in, pd);
            for (const auto& v : out.samples) {
                REQUIRE(std::abs(v) < 1e-15);
            }
        }
    }
    SECTION("equal and opposite RF terms cancel")
    {
        const Waveform rf(bl_noise(8192, 31, 0.01), fs, 20e6);
        for (Fidelity mode : {Fidelity::linearized, Fidelity::passband}) {
            const auto a = mzm_modulate(rf, plus, mode, 1544.0);
            const auto b = mzm_modulate(rf, minus, mode, 1560.0);
            const std::vector<OpticalPowerSignal> one{a};
            const std::vector<OpticalPowerSignal> both{a, b};
            const Waveform ya = combine_and_detect(one, pd);
            const Waveform yab = combine_and_detect(both, pd);
            const double pa = oracle::mean_power(ya.samples, yab.valid.begin, yab.valid.end);
            const double pab = oracle::mean_power(yab.samples, yab.valid.begin, yab.valid.end);
            INFO(to_string(mode));
            CHECK(10 * std::log10(pab / pa) <= -80.0);
        }
    }
    SECTION("output amplitude is responsivity times the optical power swing")
    {
        const Waveform rf(oracle::tone(4096, 2e6, fs, 0.2), fs, 2.4e9);
        const auto s = mzm_modulate(rf, plus, Fidelity::linearized);
        const std::vector<OpticalPowerSignal> in{s};
        const Waveform out = combine_and_detect(in, pd);
        for (std::size_t i = 0; i < out.size(); i += 13) {
            REQUIRE(std::abs(out.samples[i]) == Approx(0.8 * std::abs(s.envelope[i])).margin(1e-9));
        }
    }
    SECTION("detection is linear in its inputs")
    {
        const Waveform ra(bl_noise(4096, 41, 0.01), fs, 20e6);
        const Waveform rb(bl_noise(4096, 42, 0.01), fs, 20e6);
        PdParams dc_pd = pd;
        dc_pd.ac_coupled = false;
        for (Fidelity mode : {Fidelity::linearized, Fidelity::passband}) {
            const auto a = mzm_modulate(ra, plus, mode, 1544.0);
            const auto b = mzm_modulate(rb, minus, mode, 1560.0);
            const Waveform ya = combine_and_detect(std::vector<OpticalPowerSignal>{a}, pd);
            const Waveform yb = combine_and_detect(std::vector<OpticalPowerSignal>{b}, pd);
            const Waveform yab = combine_and_detect(std::vector<OpticalPowerSignal>{a, b}, pd);
            double worst = 0.0;
            for (std::size_t i = yab.valid.begin; i < yab.valid.end; ++i) {
                worst = std::max(worst, std::abs(yab.samples[i] - ya.samples[i] - yb.samples[i]));
            }
            INFO(to_string(mode));
            CHECK(worst < 1e-12);
        }
    }
    SECTION("baseband DC-coupled detection keeps the mean photocurrent")
    {
        const Waveform rf(CVec(1024, cplx(0.0, 0.0)), fs, 0.0);
        PdParams dc_pd = pd;
        dc_pd.ac_coupled = false;
        const auto s = mzm_modulate(rf, plus, Fidelity::linearized);
        const Waveform out = combine_and_detect(std::vector<OpticalPowerSignal>{s}, dc_pd);
        CHECK(out.samples[10].real() == Approx(0.8 * bias_point_power(plus)).epsilon(1e-12));
    }
    SECTION("wavelength collisions and grid mismatches are rejected")
    {
        const Waveform rf(bl_noise(1024, 51, 0.01), fs, 2.4e9);
        const auto a = mzm_modulate(rf, plus, Fidelity::linearized, 1550.0);
        const auto b = mzm_modulate(rf, minus, Fidelity::linearized, 1550.0);
        CHECK_THROWS_AS(combine_and_detect(std::vector<OpticalPowerSignal>{a, b}, pd), InvalidArgument);
        const Waveform other(bl_noise(1000, 52, 0.01), fs, 2.4e9);
        const auto c = mzm_modulate(other, minus, Fidelity::linearized, 1560.0);
        CHECK_THROWS_AS(combine_and_detect(std::vector<OpticalPowerSignal>{a, c}, pd), InvalidArgument);
        CHECK_THROWS_AS(combine_and_detect(std::vector<OpticalPowerSignal>{}, pd), InvalidArgument);
    }
    SECTION("noise is seeded per call")
    {
        PdParams noisy = pd;
        noisy.thermal_noise_density = 1e-9;
        const Waveform rf(bl_noise(4096, 61, 0.01), fs, 2.4e9);
        const auto a = mzm_modulate(rf, plus, Fidelity::linearized);
        const Waveform y1 = combine_and_detect(std::vector<OpticalPowerSignal>{a}, noisy);
        const Waveform y2 = combine_and_detect(std::vector<OpticalPowerSignal>{a}, noisy);
        CHECK(y1.samples == y2.samples);
        const Waveform clean = combine_and_detect(std::vector<OpticalPowerSignal>{a}, pd);
        double noise = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            noise += std::norm(y1.samples[i] - clean.samples[i]);
        }
        noise /= static_cast<double>(clean.size());
        // two quadratures, density^2 * fs each
        CHECK(noise == Approx(2 * 1e-18 * fs).epsilon(0.05));
    }
}

TEST_CASE("linearized and passband models agree for small drive", "[photonics]")
{
    // 5 MHz-wide random signal on a 20 MHz carrier, peak drive 0.05 v_pi
    std::vector<cplx> x = oracle::white_noise(32768, 71);
    const RVec lp = dsp::lowpass_taps(2.5e6, fs, 255);
    CVec shaped = dsp::convolve_same(x, lp);
    double peak = 0.0;
    for (const auto& v : shaped) {
        peak = std::max(peak, std::abs(v));
    }
    for (auto& v : shaped) {
        v /= peak;
    }
    const Waveform rf(shaped, fs, 20e6);
    MzmParams m;
    m.drive_scale = 0.05 * m.v_pi;
    const PdParams pd;

    const Waveform lin = combine_and_detect(std::vector<OpticalPowerSignal>{mzm_modulate(rf, m, Fidelity::linearized)}, pd);
    const Waveform pb = combine_and_detect(std::vector<OpticalPowerSignal>{mzm_modulate(rf, m, Fidelity::passband)}, pd);
    const SampleRange r = intersect(lin.valid, pb.valid);
    REQUIRE(r.size() > 30000);
    CVec diff(lin.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = lin.samples[i] - pb.samples[i];
    }
    CHECK(rms(diff, r) / rms(lin.samples, r) < 0.01);
}

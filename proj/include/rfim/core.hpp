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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfim {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or argument violation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An error annotated with the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) {
        throw InvalidArgument(msg);
    }
}

/// Half-open index range [begin, end) of samples that carry valid data.
struct SampleRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
    bool empty() const noexcept { return size() == 0; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }

    friend bool operator==(const SampleRange&, const SampleRange&) = default;
};

inline SampleRange intersect(SampleRange a, SampleRange b)
{
    SampleRange r{std::max(a.begin, b.begin), std::min(a.end, b.end)};
    if (r.end < r.begin) {
        r.end = r.begin;
    }
    return r;
}

/// Complex-baseband RF signal referenced to a carrier.
///
/// The physical real signal is Re{ x(t) e^{j 2 pi center_freq t} }. Samples
/// outside `valid` are filter transients and must not feed any metric.
struct Waveform {
    CVec samples;
    double sample_rate = 0.0;
    double center_freq = 0.0;
    SampleRange valid;

    Waveform() = default;
    Waveform(CVec s, double fs, double fc)
        : samples(std::move(s)), sample_rate(fs), center_freq(fc), valid{0, samples.size()} {}

    std::size_t size() const noexcept { return samples.size(); }
    double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }

    std::span<const cplx> valid_samples() const
    {
        return std::span<const cplx>(samples).subspan(valid.begin, valid.size());
    }
};

inline double mean_power(std::span<const cplx> x)
{
    if (x.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (const auto& v : x) {
        acc += std::norm(v);
    }
    return acc / static_cast<double>(x.size());
}

/// Mean power over the valid region.
inline double mean_power(const Waveform& w)
{
    return mean_power(w.valid_samples());
}

/// Mean power of `w` restricted to `range`.
inline double mean_power(const Waveform& w, SampleRange range)
{
    range = intersect(range, SampleRange{0, w.size()});
    return mean_power(std::span<const cplx>(w.samples).subspan(range.begin, range.size()));
}

inline double to_db(double linear)
{
    return 10.0 * std::log10(std::max(linear, 1e-300));
}

inline double from_db(double db)
{
    return std::pow(10.0, db / 10.0);
}

inline void require_same_grid(const Waveform& a, const Waveform& b, const char* what)
{
    if (a.sample_rate != b.sample_rate || a.center_freq != b.center_freq) {
        throw InvalidArgument(std::string(what) + ": sample rate / center frequency mismatch");
    }
    if (a.size() != b.size()) {
        throw InvalidArgument(std::string(what) + ": length mismatch");
    }
}

inline Waveform operator+(const Waveform& a, const Waveform& b)
{
    require_same_grid(a, b, "waveform addition");
    Waveform out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.samples[i] += b.samples[i];
    }
    out.valid = intersect(a.valid, b.valid);
    return out;
}

inline Waveform operator*(cplx gain, const Waveform& w)
{
    Waveform out = w;
    for (auto& v : out.samples) {
        v *= gain;
    }
    return out;
}

inline Waveform operator*(double gain, const Waveform& w)
{
    return cplx(gain, 0.0) * w;
}

} // namespace rfim

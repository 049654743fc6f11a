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

// Run directories: report.json, scenario.json, psd.csv, constellation.csv
// and a manifest.json with a SHA-256 digest of each.

#include <charconv>
#include <iomanip>

#include <openssl/evp.h>

#include "rfim/scenario_io.hpp"
#include "rfim/simulation.hpp"

namespace rfim {

namespace fs = std::filesystem;

inline constexpr const char* manifest_file = "manifest.json";
inline constexpr const char* report_file = "report.json";
inline constexpr const char* scenario_file = "scenario.json";
inline constexpr const char* psd_file = "psd.csv";
inline constexpr const char* constellation_file = "constellation.csv";

/// Lower-case hex SHA-256 of `data`.
inline std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

/// Shortest text that reads back to exactly `x`.
inline std::string format_double(double x)
{
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

struct ManifestEntry {
    std::string name;
    std::uintmax_t bytes = 0;
    std::string sha256;
};

namespace detail {

    inline json cplx_array(std::span<const cplx> v)
    {
        json re = json::array();
        json im = json::array();
        for (const auto& z : v) {
            re.push_back(z.real());
            im.push_back(z.imag());
        }
        return json{{"re", re}, {"im", im}};
    }

    inline CVec cplx_from(const json& j)
    {
        const auto& re = j.at("re");
        const auto& im = j.at("im");
        require(re.size() == im.size(), "report: constellation arrays differ in length");
        CVec out(re.size());
        for (std::size_t i = 0; i < re.size(); ++i) {
            out[i] = {re[i].get<double>(), im[i].get<double>()};
        }
        return out;
    }

    inline json evm_json(const EvmReport& e)
    {
        return json{{"evm_rms_percent", e.evm_rms_percent},
                    {"symbols_used", e.symbols_used},
                    {"first_symbol", e.first_symbol},
                    {"order", e.order},
                    {"gain", {{"re", e.gain.real()}, {"im", e.gain.imag()}}},
                    {"timing_offset_samples", e.timing_offset},
                    {"lock_correlation", e.lock_correlation},
                    {"constellation", cplx_array(e.constellation)}};
    }

    inline void write_file(const fs::path& path, std::string_view data)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw Error("cannot write " + path.string());
        }
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) {
            throw Error("write failed: " + path.string());
        }
    }

} // namespace detail

/// Machine-readable run report. Carries everything the tables are
/// rendered from.
inline json report_to_json(const RunReport& r)
{
    json j;
    j["version"] = r.version;
    j["evm_normalization"] = r.evm_normalization;
    j["scenario"] = scenario_to_json(r.scenario);
    j["derived"] = json{{"num_symbols", r.derived.num_symbols},
                        {"samples_per_symbol", r.derived.samples_per_symbol},
                        {"buffer_length", r.derived.buffer_length},
                        {"effective_carrier", r.derived.effective_carrier}};
    j["warnings"] = r.warnings;
    const auto& m = r.metrics;
    j["metrics"] = json{{"pre_evm_percent", m.pre_evm_percent},
                        {"post_evm_percent", m.post_evm_percent},
                        {"pre_sideband_db", m.pre_sideband_db},
                        {"post_sideband_db", m.post_sideband_db},
                        {"sideband_suppression_db", m.sideband_suppression_db},
                        {"pre_soi_band_db", m.pre_soi_band_db},
                        {"post_soi_band_db", m.post_soi_band_db},
                        {"residual_interference_db", m.residual_interference_db},
                        {"predicted_residual_db", m.predicted_residual_db},
                        {"converged", m.converged}};
    json channels = json::array();
    for (const auto& c : r.tune.channels) {
        channels.push_back(json{{"active", c.active},
                                {"locked", c.estimate.locked},
                                {"estimated_delay", c.estimate.delay},
                                {"peak_correlation", c.estimate.peak_correlation},
                                {"peak_to_median", c.estimate.peak_to_median},
                                {"delay", c.delay},
                                {"weight", {{"re", c.weight.real()}, {"im", c.weight.imag()}}},
                                {"bias_voltage", c.settings.bias_voltage},
                                {"attenuation_db", c.settings.attenuation_db},
                                {"path_delay", c.settings.delay}});
    }
    j["tune"] = json{{"converged", r.tune.converged},
                     {"regularized", r.tune.regularized},
                     {"residual_interference_db", r.tune.residual_interference_power_db},
                     {"predicted_residual_db", r.tune.predicted_residual_db},
                     {"channels", channels}};
    j["pre_evm"] = detail::evm_json(r.pre_evm);
    j["post_evm"] = detail::evm_json(r.post_evm);
    j["spectrum"] = json{{"center_freq", r.pre_spectrum.center_freq},
                         {"resolution_bandwidth", r.pre_spectrum.resolution_bandwidth},
                         {"bin_width", r.pre_spectrum.bin_width},
                         {"freqs", r.pre_spectrum.freqs},
                         {"pre_db", r.pre_spectrum.psd_db},
                         {"post_db", r.post_spectrum.psd_db}};
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

/// psd.csv from the "spectrum" section of a report.
inline std::string render_psd_table(const json& report)
{
    const auto& s = report.at("spectrum");
    const auto& f = s.at("freqs");
    const auto& pre = s.at("pre_db");
    const auto& post = s.at("post_db");
    require(f.size() == pre.size() && f.size() == post.size(), "report: spectrum arrays differ in length");
    std::string out = "freq_hz,pre_db,post_db\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        out += format_double(f[i].get<double>()) + "," + format_double(pre[i].get<double>()) + ","
               + format_double(post[i].get<double>()) + "\n";
    }
    return out;
}

/// constellation.csv: received symbols after gain normalisation, tagged
/// pre or post.
inline std::string render_constellation_table(const json& report)
{
    std::string out = "i,q,tag\n";
    for (const char* tag : {"pre", "post"}) {
        const CVec pts = detail::cplx_from(report.at(std::string(tag) + "_evm").at("constellation"));
        for (const auto& z : pts) {
            out += format_double(z.real()) + "," + format_double(z.imag()) + "," + tag + "\n";
        }
    }
    return out;
}

/// Parsed psd.csv.
struct PsdTable {
    RVec freq_hz;
    RVec pre_db;
    RVec post_db;
};

inline PsdTable parse_psd_table(const std::string& text)
{
    PsdTable t;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    require(line == "freq_hz,pre_db,post_db", "psd table: unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string a, b, c;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        std::getline(row, c, ',');
        t.freq_hz.push_back(std::stod(a));
        t.pre_db.push_back(std::stod(b));
        t.post_db.push_back(std::stod(c));
    }
    return t;
}

/// Spectrum rebuilt from one column of a PSD table (uniform bins assumed).
inline Spectrum spectrum_from_table(const PsdTable& t, bool post)
{
    require(t.freq_hz.size() >= 2, "psd table: need at least two rows");
    Spectrum s;
    s.freqs = t.freq_hz;
    s.psd_db = post ? t.post_db : t.pre_db;
    s.bin_width = (t.freq_hz.back() - t.freq_hz.front()) / static_cast<double>(t.freq_hz.size() - 1);
    s.resolution_bandwidth = 1.5 * s.bin_width;
    s.center_freq = 0.5 * (t.freq_hz.front() + t.freq_hz.back());
    for (double db : s.psd_db) {
        s.bin_power.push_back(from_db(db));
    }
    return s;
}

inline json manifest_json(const std::vector<ManifestEntry>& entries)
{
    json files = json::array();
    for (const auto& e : entries) {
        files.push_back(json{{"name", e.name}, {"bytes", e.bytes}, {"sha256", e.sha256}});
    }
    return json{{"version", library_version}, {"algorithm", "sha256"}, {"files", files}};
}

/// Writes the run directory (created if needed) and returns the manifest
/// entries.
inline std::vector<ManifestEntry> emit_outputs(const RunReport& report, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error("cannot create " + out_dir.string() + ": " + ec.message());
    }
    const json rj = report_to_json(report);
    const std::vector<std::pair<std::string, std::string>> files{
        {report_file, rj.dump(2) + "\n"},
        {scenario_file, dump_scenario(report.scenario)},
        {psd_file, render_psd_table(rj)},
        {constellation_file, render_constellation_table(rj)},
    };
    std::vector<ManifestEntry> entries;
    for (const auto& [name, data] : files) {
        detail::write_file(out_dir / name, data);
        entries.push_back({name, data.size(), sha256_hex(data)});
    }
    detail::write_file(out_dir / manifest_file, manifest_json(entries).dump(2) + "\n");
    return entries;
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& dir)
{
    const fs::path path = dir / manifest_file;
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    std::vector<ManifestEntry> out;
    for (const auto& f : j.at("files")) {
        out.push_back({f.at("name").get<std::string>(), f.at("bytes").get<std::uintmax_t>(),
                       f.at("sha256").get<std::string>()});
    }
    return out;
}

/// Files whose size or digest no longer matches the manifest (empty when
/// everything verifies).
inline std::vector<std::string> verify_manifest(const fs::path& dir)
{
    std::vector<std::string> bad;
    for (const auto& e : read_manifest(dir)) {
        const fs::path p = dir / e.name;
        if (!fs::exists(p)) {
            bad.push_back(e.name + ": missing");
            continue;
        }
        const std::string data = read_text_file(p);
        if (data.size() != e.bytes || sha256_hex(data) != e.sha256) {
            bad.push_back(e.name + ": digest mismatch");
        }
    }
    return bad;
}

/// Re-renders the tables of a run directory from its report.json and
/// checks them against the manifest. Returns the parsed report.
inline json rerender_run(const fs::path& dir, std::vector<std::string>* problems = nullptr)
{
    std::vector<std::string> bad = verify_manifest(dir);
    json rj;
    try {
        rj = json::parse(read_text_file(dir / report_file));
    } catch (const json::exception& e) {
        throw Error((dir / report_file).string() + ": " + e.what());
    }
    const std::vector<std::pair<std::string, std::string>> tables{
        {psd_file, render_psd_table(rj)}, {constellation_file, render_constellation_table(rj)}};
    const auto manifest = read_manifest(dir);
    for (const auto& [name, data] : tables) {
        auto it = std::find_if(manifest.begin(), manifest.end(), [&](const ManifestEntry& e) { return e.name == name; });
        if (it == manifest.end()) {
            bad.push_back(name + ": not in manifest");
        } else if (sha256_hex(data) != it->sha256) {
            bad.push_back(name + ": re-rendered table differs from the recorded one");
        }
    }
    if (problems) {
        *problems = std::move(bad);
    }
    return rj;
}

/// One row per sweep point.
inline std::string render_sweep_table(const std::string& axis, std::span<const double> values,
                                      std::span<const RunReport> reports)
{
    std::string out = axis + ",pre_evm_percent,post_evm_percent,sideband_suppression_db,residual_interference_db,converged\n";
    for (std::size_t i = 0; i < values.size() && i < reports.size(); ++i) {
        const auto& m = reports[i].metrics;
        out += format_double(values[i]) + "," + format_double(m.pre_evm_percent) + ","
               + format_double(m.post_evm_percent) + "," + format_double(m.sideband_suppression_db) + ","
               + format_double(m.residual_interference_db) + "," + (m.converged ? "true" : "false") + "\n";
    }
    return out;
}

/// Sweep directory: one run directory per point plus sweep.csv and a
/// top-level manifest covering sweep.csv and each run's manifest.
inline std::vector<ManifestEntry> emit_sweep(const std::string& axis, std::span<const double> values,
                                             std::span<const RunReport> reports, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error("cannot create " + out_dir.string() + ": " + ec.message());
    }
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream name;
        name << "run_" << std::setw(3) << std::setfill('0') << i;
        emit_outputs(reports[i], out_dir / name.str());
        const std::string m = read_text_file(out_dir / name.str() / manifest_file);
        entries.push_back({name.str() + "/" + manifest_file, m.size(), sha256_hex(m)});
    }
    const std::string table = render_sweep_table(axis, values, reports);
    detail::write_file(out_dir / "sweep.csv", table);
    entries.push_back({"sweep.csv", table.size(), sha256_hex(table)});
    detail::write_file(out_dir / manifest_file, manifest_json(entries).dump(2) + "\n");
    return entries;
}

} // namespace rfim

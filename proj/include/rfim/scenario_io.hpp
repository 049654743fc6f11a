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

// JSON scenario files.
//
// Every key is optional and falls back to the library default; unknown
// keys are rejected so that typos do not silently become defaults.
// `freq_deviation: null` requests calibration, and "inf" is accepted for an
// ideal extinction ratio.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rfim/link.hpp"

namespace rfim {

using json = nlohmann::ordered_json;

/// Parse or type error in a scenario document.
class ScenarioParseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

    /// Walks one JSON object, consuming keys so leftovers can be reported.
    class ObjectReader {
    public:
        ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
        {
            if (!j_.is_object()) {
                fail(path_, "must be an object");
            }
        }

        [[noreturn]] static void fail(const std::string& field, const std::string& what)
        {
            throw ScenarioParseError("scenario: " + field + " " + what);
        }

        std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

        const json* get(const std::string& key)
        {
            seen_.push_back(key);
            auto it = j_.find(key);
            return it == j_.end() ? nullptr : &*it;
        }

        void number(const std::string& key, double& out, bool allow_inf = false)
        {
            const json* v = get(key);
            if (!v) {
                return;
            }
            if (v->is_number()) {
                out = v->get<double>();
            } else if (allow_inf && v->is_string() && (*v == "inf" || *v == "+inf")) {
                out = std::numeric_limits<double>::infinity();
            } else {
                fail(field(key), allow_inf ? "must be a number or \"inf\"" : "must be a number");
            }
        }

        void optional_number(const std::string& key, std::optional<double>& out)
        {
            const json* v = get(key);
            if (!v) {
                return;
            }
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                fail(field(key), "must be a number or null");
            }
        }

        template <typename Int>
        void integer(const std::string& key, Int& out)
        {
            const json* v = get(key);
            if (!v) {
                return;
            }
            if (v->is_number_unsigned() || (v->is_number_integer() && std::is_signed_v<Int>)) {
                out = v->get<Int>();
            } else if (v->is_number_integer()) {
                fail(field(key), "must be non-negative");
            } else {
                fail(field(key), "must be an integer");
            }
        }

        void boolean(const std::string& key, bool& out)
        {
            const json* v = get(key);
            if (!v) {
                return;
            }
            if (!v->is_boolean()) {
                fail(field(key), "must be true or false");
            }
            out = v->get<bool>();
        }

        void string(const std::string& key, std::string& out)
        {
            const json* v = get(key);
            if (!v) {
                return;
            }
            if (!v->is_string()) {
                fail(field(key), "must be a string");
            }
            out = v->get<std::string>();
        }

        void finish() const
        {
            for (auto it = j_.begin(); it != j_.end(); ++it) {
                if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
                    fail(field(it.key()), "is not a recognised key");
                }
            }
        }

    private:
        const json& j_;
        std::string path_;
        std::vector<std::string> seen_;
    };

    inline void read_modulator(const json& j, const std::string& path, MzmParams& m)
    {
        ObjectReader r(j, path);
        r.number("v_pi", m.v_pi);
        r.number("bias_voltage", m.bias_voltage);
        r.number("insertion_loss_db", m.insertion_loss_db);
        r.number("extinction_ratio_db", m.extinction_ratio_db, true);
        r.number("input_power", m.input_power);
        r.number("drive_scale", m.drive_scale);
        r.finish();
    }

    inline void read_path(const json& j, const std::string& path, OpticalPathParams& p)
    {
        ObjectReader r(j, path);
        r.number("wavelength_nm", p.wavelength_nm);
        r.number("attenuation_db", p.attenuation_db);
        r.number("delay", p.delay);
        r.number("excess_loss_db", p.excess_loss_db);
        r.finish();
    }

    template <typename T, typename Fn>
    void read_array(ObjectReader& r, const std::string& key, std::vector<T>& out, Fn&& read_one)
    {
        const json* v = r.get(key);
        if (!v) {
            return;
        }
        if (!v->is_array()) {
            ObjectReader::fail(r.field(key), "must be an array");
        }
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            T item{};
            read_one((*v)[i], r.field(key) + "[" + std::to_string(i) + "]", item);
            out.push_back(std::move(item));
        }
    }

    inline json modulator_json(const MzmParams& m)
    {
        json j;
        j["v_pi"] = m.v_pi;
        j["bias_voltage"] = m.bias_voltage;
        j["insertion_loss_db"] = m.insertion_loss_db;
        if (std::isinf(m.extinction_ratio_db)) {
            j["extinction_ratio_db"] = "inf";
        } else {
            j["extinction_ratio_db"] = m.extinction_ratio_db;
        }
        j["input_power"] = m.input_power;
        j["drive_scale"] = m.drive_scale;
        return j;
    }

    inline json path_json(const OpticalPathParams& p)
    {
        return json{{"wavelength_nm", p.wavelength_nm},
                    {"attenuation_db", p.attenuation_db},
                    {"delay", p.delay},
                    {"excess_loss_db", p.excess_loss_db}};
    }

    /// 1-based line and column of a byte offset.
    inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset)
    {
        offset = std::min(offset, text.size());
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

} // namespace detail

/// Scenario from a JSON value, with library defaults for missing keys.
/// Not validated and not resolved.
inline Scenario scenario_from_json(const json& j)
{
    using detail::ObjectReader;
    Scenario s;
    ObjectReader root(j, "");
    root.string("name", s.name);

    if (const json* v = root.get("sim")) {
        ObjectReader r(*v, "sim");
        r.number("sample_rate", s.sim.sample_rate);
        r.number("duration", s.sim.duration);
        r.number("center_freq", s.sim.center_freq);
        std::string fidelity = to_string(s.sim.fidelity);
        r.string("fidelity", fidelity);
        if (fidelity == "linearized") {
            s.sim.fidelity = Fidelity::linearized;
        } else if (fidelity == "passband") {
            s.sim.fidelity = Fidelity::passband;
        } else {
            ObjectReader::fail("sim.fidelity", "must be \"linearized\" or \"passband\"");
        }
        r.number("passband_carrier", s.sim.passband_carrier);
        r.number("search_window", s.sim.search_window);
        r.number("delay_error", s.sim.delay_error);
        r.finish();
    }

    if (const json* v = root.get("soi")) {
        ObjectReader r(*v, "soi");
        r.integer("order", s.soi.qam.order);
        r.number("symbol_rate", s.soi.qam.symbol_rate);
        r.number("rolloff", s.soi.qam.rolloff);
        r.integer("filter_span", s.soi.qam.filter_span);
        r.number("gain", s.soi.gain);
        r.integer("seed", s.soi.seed);
        r.finish();
    }

    detail::read_array(root, "interferers", s.interferers, [](const json& item, const std::string& path, InterfererSpec& it) {
        ObjectReader r(item, path);
        r.number("modulating_noise_bandwidth", it.fm.modulating_noise_bandwidth);
        r.optional_number("freq_deviation", it.fm.freq_deviation);
        r.number("target_occupied_bandwidth", it.fm.target_occupied_bandwidth);
        r.integer("seed", it.fm.seed);
        r.number("gain", it.gain);
        r.number("delay", it.delay);
        r.finish();
    });

    if (const json* v = root.get("receiver")) {
        ObjectReader r(*v, "receiver");
        if (const json* m = r.get("modulator")) {
            detail::read_modulator(*m, "receiver.modulator", s.receiver_modulator);
        }
        if (const json* p = r.get("path")) {
            detail::read_path(*p, "receiver.path", s.receiver_path);
        }
        r.finish();
    }

    detail::read_array(root, "reference_channels", s.reference_channels,
                       [](const json& item, const std::string& path, ReferenceChannel& ch) {
                           ObjectReader r(item, path);
                           if (const json* m = r.get("modulator")) {
                               detail::read_modulator(*m, path + ".modulator", ch.modulator);
                           }
                           if (const json* p = r.get("path")) {
                               detail::read_path(*p, path + ".path", ch.path);
                           }
                           r.finish();
                       });

    if (const json* v = root.get("pd")) {
        ObjectReader r(*v, "pd");
        r.number("responsivity", s.pd.responsivity);
        r.boolean("ac_coupled", s.pd.ac_coupled);
        r.number("thermal_noise_density", s.pd.thermal_noise_density);
        r.integer("seed", s.pd.seed);
        r.finish();
    }

    if (const json* v = root.get("sweep")) {
        ObjectReader r(*v, "sweep");
        SweepSpec sw;
        r.string("axis", sw.axis);
        const json* values = r.get("values");
        if (!values || !values->is_array()) {
            ObjectReader::fail("sweep.values", "must be an array of numbers");
        }
        for (const auto& x : *values) {
            if (!x.is_number()) {
                ObjectReader::fail("sweep.values", "must be an array of numbers");
            }
            sw.values.push_back(x.get<double>());
        }
        if (!is_sweep_axis_name(sw.axis)) {
            ObjectReader::fail("sweep.axis", "'" + sw.axis + "' is not a sweepable parameter");
        }
        r.finish();
        s.sweep = std::move(sw);
    }
    root.finish();
    return s;
}

/// Every field of `s`, including defaults, as JSON.
inline json scenario_to_json(const Scenario& s)
{
    json j;
    j["name"] = s.name;
    j["sim"] = json{{"sample_rate", s.sim.sample_rate},
                    {"duration", s.sim.duration},
                    {"center_freq", s.sim.center_freq},
                    {"fidelity", to_string(s.sim.fidelity)},
                    {"passband_carrier", s.sim.passband_carrier},
                    {"search_window", s.sim.search_window},
                    {"delay_error", s.sim.delay_error}};
    j["soi"] = json{{"order", s.soi.qam.order},
                    {"symbol_rate", s.soi.qam.symbol_rate},
                    {"rolloff", s.soi.qam.rolloff},
                    {"filter_span", s.soi.qam.filter_span},
                    {"gain", s.soi.gain},
                    {"seed", s.soi.seed}};
    j["interferers"] = json::array();
    for (const auto& it : s.interferers) {
        json e;
        e["modulating_noise_bandwidth"] = it.fm.modulating_noise_bandwidth;
        e["freq_deviation"] = it.fm.freq_deviation ? json(*it.fm.freq_deviation) : json(nullptr);
        e["target_occupied_bandwidth"] = it.fm.target_occupied_bandwidth;
        e["seed"] = it.fm.seed;
        e["gain"] = it.gain;
        e["delay"] = it.delay;
        j["interferers"].push_back(e);
    }
    j["receiver"] = json{{"modulator", detail::modulator_json(s.receiver_modulator)},
                         {"path", detail::path_json(s.receiver_path)}};
    j["reference_channels"] = json::array();
    for (const auto& ch : s.reference_channels) {
        j["reference_channels"].push_back(
            json{{"modulator", detail::modulator_json(ch.modulator)}, {"path", detail::path_json(ch.path)}});
    }
    j["pd"] = json{{"responsivity", s.pd.responsivity},
                   {"ac_coupled", s.pd.ac_coupled},
                   {"thermal_noise_density", s.pd.thermal_noise_density},
                   {"seed", s.pd.seed}};
    if (s.sweep) {
        j["sweep"] = json{{"axis", s.sweep->axis}, {"values", s.sweep->values}};
    }
    return j;
}

/// Parses scenario text. Syntax errors report line and column; `origin`
/// names the source in diagnostics.
inline Scenario parse_scenario(std::string_view text, const std::string& origin = "<scenario>")
{
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
        const auto [line, col] = detail::line_column(text, offset);
        std::string msg = e.what();
        if (auto pos = msg.find("syntax error"); pos != std::string::npos) {
            msg = msg.substr(pos);
        }
        throw ScenarioParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
    try {
        return scenario_from_json(j);
    } catch (const ScenarioParseError& e) {
        throw ScenarioParseError(origin + ": " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads, validates and resolves a scenario file: the result carries every
/// default and calibrated value explicitly.
inline Scenario load_scenario(const std::filesystem::path& path)
{
    Scenario s = parse_scenario(read_text_file(path), path.string());
    (void)validate(s);
    return resolve_scenario(s);
}

inline std::string dump_scenario(const Scenario& s)
{
    return scenario_to_json(s).dump(2) + "\n";
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << dump_scenario(s);
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

} // namespace rfim

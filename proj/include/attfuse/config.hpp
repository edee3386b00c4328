// SPDX-License-Identifier: Apache-2.0
//
// attfuse  Hybrid GNSS + 5G attitude determination toolkit
// Copyright (C) 2026 attfuse contributors
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
//
// JSON scenario configuration. Field names mirror ScenarioConfig; units are
// meters, dBm, dBm/Hz and degrees. Unknown keys are rejected so typos fail
// loudly instead of silently reverting a field to its default.

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "simulation.hpp"
#include "types.hpp"

namespace attfuse {

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw Error(ErrorCode::configuration,
                        "unknown key \"" + item.key() + "\" in " + where);
}

template <typename T>
inline void get_if(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration,
                    "field \"" + std::string(key) + "\" in " + where + ": " + e.what());
    }
}

} // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    detail::check_keys(j,
                       {"n_satellites", "n_baselines", "baselines", "sigma_phase", "n_bs", "radio",
                        "attitude_truth", "constellation", "ambiguity_half_range", "user_position",
                        "search", "noiseless", "seed", "n_trials"},
                       "config");

    detail::get_if(j, "n_satellites", cfg.n_satellites, "config");
    detail::get_if(j, "n_baselines", cfg.n_baselines, "config");
    detail::get_if(j, "sigma_phase", cfg.sigma_phase, "config");
    detail::get_if(j, "n_bs", cfg.n_bs, "config");
    detail::get_if(j, "ambiguity_half_range", cfg.ambiguity_half_range, "config");
    detail::get_if(j, "noiseless", cfg.noiseless, "config");
    detail::get_if(j, "seed", cfg.seed, "config");
    detail::get_if(j, "n_trials", cfg.n_trials, "config");

    if (j.contains("baselines")) {
        const auto& b = j.at("baselines");
        if (!b.is_array() || b.empty())
            throw Error(ErrorCode::configuration, "field \"baselines\": expected a nonempty array");
        cfg.baselines.resize(3, static_cast<Eigen::Index>(b.size()));
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (!b[i].is_array() || b[i].size() != 3)
                throw Error(ErrorCode::configuration,
                            "field \"baselines\": each baseline must have 3 components");
            for (int k = 0; k < 3; ++k) cfg.baselines(k, static_cast<Eigen::Index>(i)) = b[i][k].get<double>();
        }
        if (!j.contains("n_baselines")) cfg.n_baselines = static_cast<int>(b.size());
    }

    if (j.contains("user_position")) {
        const auto& u = j.at("user_position");
        if (!u.is_array() || u.size() != 3)
            throw Error(ErrorCode::configuration, "field \"user_position\": expected 3 components");
        for (int k = 0; k < 3; ++k) cfg.user_position[k] = u[k].get<double>();
    }

    if (j.contains("radio")) {
        const auto& r = j.at("radio");
        detail::check_keys(r,
                           {"carrier_hz", "bandwidth_hz", "tx_power_dbm", "n_transmissions",
                            "noise_psd_dbm_hz", "array_rows", "array_cols"},
                           "radio");
        detail::get_if(r, "carrier_hz", cfg.radio.carrier_hz, "radio");
        detail::get_if(r, "bandwidth_hz", cfg.radio.bandwidth_hz, "radio");
        detail::get_if(r, "tx_power_dbm", cfg.radio.tx_power_dbm, "radio");
        detail::get_if(r, "n_transmissions", cfg.radio.n_transmissions, "radio");
        detail::get_if(r, "noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz, "radio");
        detail::get_if(r, "array_rows", cfg.radio.array_rows, "radio");
        detail::get_if(r, "array_cols", cfg.radio.array_cols, "radio");
    }

    if (j.contains("attitude_truth")) {
        const auto& a = j.at("attitude_truth");
        if (a.is_string() && a.get<std::string>() == "random") {
            cfg.attitude_truth.reset();
        } else if (a.is_object()) {
            detail::check_keys(a, {"yaw_deg", "pitch_deg", "roll_deg"}, "attitude_truth");
            EulerAngles e;
            double yaw = 0, pitch = 0, roll = 0;
            detail::get_if(a, "yaw_deg", yaw, "attitude_truth");
            detail::get_if(a, "pitch_deg", pitch, "attitude_truth");
            detail::get_if(a, "roll_deg", roll, "attitude_truth");
            e.yaw = deg2rad(yaw);
            e.pitch = deg2rad(pitch);
            e.roll = deg2rad(roll);
            cfg.attitude_truth = e;
        } else {
            throw Error(ErrorCode::configuration,
                        "field \"attitude_truth\": expected \"random\" or an angle object");
        }
    }

    if (j.contains("constellation")) {
        const auto& c = j.at("constellation");
        detail::check_keys(c, {"policy", "azimuth_deg", "elevation_deg"}, "constellation");
        std::string policy = "per_trial";
        detail::get_if(c, "policy", policy, "constellation");
        if (policy == "per_trial")
            cfg.constellation.policy = ConstellationSpec::Policy::per_trial;
        else if (policy == "fixed")
            cfg.constellation.policy = ConstellationSpec::Policy::fixed;
        else
            throw Error(ErrorCode::configuration,
                        "field \"constellation.policy\": expected \"per_trial\" or \"fixed\"");
        if (c.contains("azimuth_deg") != c.contains("elevation_deg"))
            throw Error(ErrorCode::configuration,
                        "constellation: azimuth_deg and elevation_deg must come together");
        if (c.contains("azimuth_deg")) {
            std::vector<double> az, el;
            detail::get_if(c, "azimuth_deg", az, "constellation");
            detail::get_if(c, "elevation_deg", el, "constellation");
            if (az.size() != el.size())
                throw Error(ErrorCode::configuration,
                            "constellation: azimuth_deg and elevation_deg sizes differ");
            cfg.constellation.az_el_deg.clear();
            for (std::size_t i = 0; i < az.size(); ++i)
                cfg.constellation.az_el_deg.emplace_back(az[i], el[i]);
        }
    }

    if (j.contains("search")) {
        const auto& s = j.at("search");
        detail::check_keys(
            s, {"initial_candidates", "expansion", "max_candidates", "so3_tol", "so3_max_iterations"},
            "search");
        detail::get_if(s, "initial_candidates", cfg.search.initial_candidates, "search");
        detail::get_if(s, "expansion", cfg.search.expansion, "search");
        detail::get_if(s, "max_candidates", cfg.search.max_candidates, "search");
        detail::get_if(s, "so3_tol", cfg.search.so3_tol, "search");
        detail::get_if(s, "so3_max_iterations", cfg.search.so3_max_iterations, "search");
    }

    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["n_satellites"] = cfg.n_satellites;
    j["n_baselines"] = cfg.n_baselines;
    auto baselines = nlohmann::json::array();
    for (Eigen::Index m = 0; m < cfg.baselines.cols(); ++m)
        baselines.push_back({cfg.baselines(0, m), cfg.baselines(1, m), cfg.baselines(2, m)});
    j["baselines"] = baselines;
    j["sigma_phase"] = cfg.sigma_phase;
    j["n_bs"] = cfg.n_bs;
    j["radio"] = {{"carrier_hz", cfg.radio.carrier_hz},
                  {"bandwidth_hz", cfg.radio.bandwidth_hz},
                  {"tx_power_dbm", cfg.radio.tx_power_dbm},
                  {"n_transmissions", cfg.radio.n_transmissions},
                  {"noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz},
                  {"array_rows", cfg.radio.array_rows},
                  {"array_cols", cfg.radio.array_cols}};
    if (cfg.attitude_truth)
        j["attitude_truth"] = {{"yaw_deg", rad2deg(cfg.attitude_truth->yaw)},
                               {"pitch_deg", rad2deg(cfg.attitude_truth->pitch)},
                               {"roll_deg", rad2deg(cfg.attitude_truth->roll)}};
    else
        j["attitude_truth"] = "random";
    nlohmann::json cons;
    cons["policy"] =
        cfg.constellation.policy == ConstellationSpec::Policy::fixed ? "fixed" : "per_trial";
    if (!cfg.constellation.az_el_deg.empty()) {
        std::vector<double> az, el;
        for (const auto& [a, e] : cfg.constellation.az_el_deg) {
            az.push_back(a);
            el.push_back(e);
        }
        cons["azimuth_deg"] = az;
        cons["elevation_deg"] = el;
    }
    j["constellation"] = cons;
    j["ambiguity_half_range"] = cfg.ambiguity_half_range;
    j["user_position"] = {cfg.user_position[0], cfg.user_position[1], cfg.user_position[2]};
    j["search"] = {{"initial_candidates", cfg.search.initial_candidates},
                   {"expansion", cfg.search.expansion},
                   {"max_candidates", cfg.search.max_candidates},
                   {"so3_tol", cfg.search.so3_tol},
                   {"so3_max_iterations", cfg.search.so3_max_iterations}};
    j["noiseless"] = cfg.noiseless;
    j["seed"] = cfg.seed;
    j["n_trials"] = cfg.n_trials;
    return j;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::configuration, "cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::configuration, std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

} // namespace attfuse

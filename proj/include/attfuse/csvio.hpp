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
// CSV and manifest writers. Numbers use shortest round-trip formatting
// (std::to_chars), so identical inputs always serialize to identical bytes;
// the schema version rides in a leading comment line.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "simulation.hpp"
#include "types.hpp"
#include "version.hpp"

namespace attfuse {

inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(long long v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Write via a temporary in the same directory, then rename into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::configuration, "cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw Error(ErrorCode::configuration, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string aggregate_csv(const AggregateMetrics& agg) {
    std::string s = "# attfuse-csv v1 kind=aggregate\nmethod,metric,value\n";
    const auto emit = [&](const char* method, const MethodAggregate& m) {
        const auto row = [&](const char* metric, const std::string& value) {
            s += method;
            s += ',';
            s += metric;
            s += ',';
            s += value;
            s += '\n';
        };
        row("n_trials", fmt_int(m.n_trials));
        row("n_failed", fmt_int(m.n_failed));
        row("n_bound_open", fmt_int(m.n_bound_open));
        row("success_rate", fmt_double(m.success_rate));
        row("float_Z_mean", fmt_double(m.float_z_mean));
        row("float_Z_rmse", fmt_double(m.float_z_rmse));
        row("float_R_mean", fmt_double(m.float_r_mean));
        row("float_R_rmse", fmt_double(m.float_r_rmse));
        row("fixed_R_frob_mean", fmt_double(m.fixed_r_frob_mean));
        row("fixed_R_frob_rmse", fmt_double(m.fixed_r_frob_rmse));
        row("fixed_R_deg_mean", fmt_double(m.fixed_r_deg_mean));
        row("fixed_R_deg_rmse", fmt_double(m.fixed_r_deg_rmse));
    };
    emit("hybrid", agg.hybrid);
    emit("gnss_only", agg.gnss_only);
    emit("fiveg_only", agg.fiveg_only);
    return s;
}

inline std::string trials_csv(const std::vector<TrialResult>& trials) {
    std::string s = "# attfuse-csv v1 kind=trials\ntrial,seed";
    for (const char* m : {"hybrid", "gnss_only", "fiveg_only"})
        for (const char* f :
             {"_ok", "_success", "_bound_closed", "_float_Z", "_float_R", "_fixed_R_frob",
              "_fixed_R_deg"}) {
            s += ',';
            s += m;
            s += f;
        }
    s += '\n';
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const TrialResult& t = trials[i];
        s += fmt_int(static_cast<long long>(i));
        s += ',';
        s += fmt_int(static_cast<long long>(t.seed));
        for (const MethodTrial* m : {&t.hybrid, &t.gnss_only, &t.fiveg_only}) {
            s += ',';
            s += m->included() ? '1' : '0';
            s += ',';
            s += m->success ? '1' : '0';
            s += ',';
            s += m->bound_closed ? '1' : '0';
            s += ',';
            s += fmt_double(m->float_z_error);
            s += ',';
            s += fmt_double(m->float_r_error);
            s += ',';
            s += fmt_double(m->fixed_r_error_frob);
            s += ',';
            s += fmt_double(m->fixed_r_error_deg);
        }
        s += '\n';
    }
    return s;
}

inline std::string table_csv(const TableGrid& grid, bool success_grid) {
    std::string s = "# attfuse-csv v1 kind=";
    s += success_grid ? "table_success" : "table_error";
    s += "\nn_sats";
    for (const int l : grid.bs_counts) {
        s += ",L";
        s += fmt_int(l);
    }
    s += '\n';
    const MatX& values = success_grid ? grid.success : grid.error_deg;
    for (std::size_t r = 0; r < grid.sat_counts.size(); ++r) {
        s += fmt_int(grid.sat_counts[r]);
        for (std::size_t c = 0; c < grid.bs_counts.size(); ++c) {
            s += ',';
            s += fmt_double(values(r, c));
        }
        s += '\n';
    }
    return s;
}

inline std::string figure_csv(const std::vector<FigureRow>& rows) {
    std::string s = "# attfuse-csv v1 kind=figure\nsetup,method,metric,trial_or_L,value\n";
    for (const FigureRow& r : rows) {
        s += r.setup;
        s += ',';
        s += r.method;
        s += ',';
        s += r.metric;
        s += ',';
        s += fmt_double(r.x);
        s += ',';
        s += fmt_double(r.value);
        s += '\n';
    }
    return s;
}

struct ManifestInfo {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    int trials = 0;
    int jobs = 1;
    std::int64_t started_unix = 0;
    std::int64_t finished_unix = 0;
    std::vector<std::string> outputs;
};

inline std::string manifest_text(const ManifestInfo& info) {
    std::string s;
    s += "command=" + info.command + '\n';
    s += "config=" + info.config_path + '\n';
    s += "seed=" + fmt_int(static_cast<long long>(info.seed)) + '\n';
    s += "trials=" + fmt_int(info.trials) + '\n';
    s += "jobs=" + fmt_int(info.jobs) + '\n';
    s += std::string("version=") + attfuse_version + '\n';
    s += "started_unix=" + fmt_int(info.started_unix) + '\n';
    s += "finished_unix=" + fmt_int(info.finished_unix) + '\n';
    for (const auto& o : info.outputs) s += "output=" + o + '\n';
    return s;
}

} // namespace attfuse

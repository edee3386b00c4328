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
// Seeded Monte-Carlo harness. A trial is a pure function of (config, seed):
// every randomized ingredient draws from its own substream (1 constellation,
// 2 attitude, 3 ambiguities, 4 carrier/code noise, 5 direction measurements),
// so changing one ingredient or the station count never shifts the others.
// Campaigns use trial seeds base+0 .. base+n-1 and aggregate in index order,
// which makes results independent of worker count.
//
// Error accounting: solver failures are excluded from error averages and
// reported; trials where the search returned its incumbent without closing
// the optimality bound are included in the averages (the incumbent is the
// reported estimate) and counted separately.

#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "estimator.hpp"
#include "rng.hpp"

namespace attfuse {

struct ConstellationSpec {
    enum class Policy { per_trial, fixed };
    Policy policy = Policy::per_trial;
    // explicit geometry overrides the policy when nonempty
    std::vector<std::pair<double, double>> az_el_deg;
};

struct ScenarioConfig {
    int n_satellites = 5; // tracked satellites including the pivot
    int n_baselines = 3;
    MatX baselines = Mat3::Identity(); // body frame, metres, one column each
    double sigma_phase = 0.001;        // m; 0 selects a noiseless carrier/code draw
    int n_bs = 1;
    RadioConfig radio;
    std::optional<EulerAngles> attitude_truth; // unset: random per trial
    ConstellationSpec constellation;
    int ambiguity_half_range = 100;
    Vec3 user_position = Vec3::Zero();
    SearchControl search;
    bool noiseless = false;
    std::uint64_t seed = 0;
    int n_trials = 100;

    void validate() const {
        if (n_satellites < 2)
            throw Error(ErrorCode::configuration, "n_satellites must be at least 2");
        if (n_baselines < 1 || baselines.rows() != 3 ||
            static_cast<int>(baselines.cols()) != n_baselines)
            throw Error(ErrorCode::configuration, "baselines must be 3 x n_baselines");
        if (sigma_phase < 0.0)
            throw Error(ErrorCode::configuration, "sigma_phase must be non-negative");
        if (n_bs < 0 || n_bs > 8)
            throw Error(ErrorCode::configuration, "n_bs must lie in [0, 8] (preset survey)");
        if (ambiguity_half_range < 0)
            throw Error(ErrorCode::configuration, "ambiguity_half_range must be non-negative");
        if (n_trials < 1) throw Error(ErrorCode::configuration, "n_trials must be >= 1");
        if (!constellation.az_el_deg.empty() &&
            static_cast<int>(constellation.az_el_deg.size()) != n_satellites)
            throw Error(ErrorCode::configuration,
                        "explicit constellation size must equal n_satellites");
        radio.validate();
    }
};

namespace detail {
inline double dnan() { return std::numeric_limits<double>::quiet_NaN(); }
} // namespace detail

// Which estimators a trial should run. Draws come from fixed substreams, so
// deselecting a method never changes the results of the others.
struct MethodSelection {
    bool gnss_only = true;
    bool hybrid = true;
    bool fiveg_only = true;
};

struct MethodTrial {
    bool attempted = false;
    bool solver_error = false;
    std::string error;            // error code and message when solver_error
    bool success = false;         // fixed integers exactly equal the truth
    bool bound_closed = true;
    double float_z_error = detail::dnan();      // || Z^ - Z ||_F
    double float_r_error = detail::dnan();      // || R^ - R ||_F, unconstrained
    double fixed_r_error_frob = detail::dnan(); // || R~ - R ||_F
    double fixed_r_error_deg = detail::dnan();  // geodesic angle

    bool included() const { return attempted && !solver_error; }
};

struct TrialResult {
    std::uint64_t seed = 0;
    MethodTrial hybrid;
    MethodTrial gnss_only;
    MethodTrial fiveg_only;
};

inline TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t seed,
                             const MethodSelection& methods = {}) {
    cfg.validate();
    TrialResult tr;
    tr.seed = seed;
    tr.hybrid.attempted = methods.hybrid;
    tr.gnss_only.attempted = methods.gnss_only;
    tr.fiveg_only.attempted = methods.fiveg_only && cfg.n_bs >= 2;

    const auto fail_all = [&](const std::string& msg) {
        for (MethodTrial* m : {&tr.hybrid, &tr.gnss_only, &tr.fiveg_only})
            if (m->attempted) {
                m->solver_error = true;
                m->error = msg;
            }
    };

    GnssDesign design;
    BaselineSet baselines;
    GnssEpoch epoch;
    std::optional<AoaSet> aoa;
    Rotation r_true;
    try {
        Constellation cons;
        if (!cfg.constellation.az_el_deg.empty()) {
            cons = constellation_from_angles(cfg.constellation.az_el_deg);
        } else if (cfg.constellation.policy == ConstellationSpec::Policy::fixed) {
            Rng rng = substream(cfg.seed, 1);
            cons = synth_constellation(cfg.n_satellites, rng);
        } else {
            Rng rng = substream(seed, 1);
            cons = synth_constellation(cfg.n_satellites, rng);
        }

        if (cfg.attitude_truth) {
            r_true = rotation_from_euler(*cfg.attitude_truth);
        } else {
            Rng rng = substream(seed, 2);
            r_true = random_rotation(rng);
        }

        Rng zrng = substream(seed, 3);
        const MatXi z_true =
            sample_ambiguities(cfg.n_satellites - 1, cfg.n_baselines, cfg.ambiguity_half_range, zrng);

        // sigma 0 keeps the nominal weights but zeroes the noise realization
        const bool noiseless_gnss = cfg.noiseless || !(cfg.sigma_phase > 0.0);
        const double sigma_eff = cfg.sigma_phase > 0.0 ? cfg.sigma_phase : 0.001;
        baselines = BaselineSet(cfg.baselines);
        design = build_design(cons, baselines, GnssNoiseModel::from_sigma_phase(sigma_eff));

        Rng grng = substream(seed, 4);
        epoch = simulate_epoch(design, baselines, r_true, z_true, grng, noiseless_gnss);

        const bool need_aoa =
            cfg.n_bs >= 1 && ((methods.hybrid && cfg.n_bs >= 1) || tr.fiveg_only.attempted);
        if (need_aoa) {
            const BsLayout layout = bs_layout(cfg.n_bs, cfg.user_position);
            Rng arng = substream(seed, 5);
            aoa = simulate_aoa(layout, cfg.radio, r_true, arng, cfg.noiseless);
        }
    } catch (const std::exception& e) {
        fail_all(e.what());
        return tr;
    }

    const auto record = [&](MethodTrial& m, const FloatSolution& fs, const FixResult& fx) {
        m.bound_closed = fx.bound_closed;
        m.success = (fx.z_fixed == epoch.Z_true);
        const VecX z_true_vec =
            Eigen::Map<const VecXi>(epoch.Z_true.data(), epoch.Z_true.size()).cast<double>();
        m.float_z_error = (fs.z_float - z_true_vec).norm();
        m.float_r_error = frobenius_error(fs.r_float, r_true.matrix());
        m.fixed_r_error_frob = frobenius_error(fx.r_fixed.matrix(), r_true.matrix());
        m.fixed_r_error_deg = geodesic_angle_deg(fx.r_fixed, r_true);
    };

    const bool need_gnss_solve = methods.gnss_only || (methods.hybrid && cfg.n_bs == 0);
    MethodTrial gnss_solve;
    if (need_gnss_solve) {
        gnss_solve.attempted = true;
        try {
            const HybridModel model = assemble_hybrid(design, epoch.Y, baselines.F, nullptr);
            const FloatSolution fs = solve_float(model);
            const FixResult fx = constrained_search(fs, cfg.search);
            record(gnss_solve, fs, fx);
        } catch (const std::exception& e) {
            gnss_solve.solver_error = true;
            gnss_solve.error = e.what();
        }
    }
    if (methods.gnss_only) tr.gnss_only = gnss_solve;

    if (methods.hybrid) {
        if (cfg.n_bs >= 1) {
            try {
                const HybridModel model = assemble_hybrid(design, epoch.Y, baselines.F, &*aoa);
                const FloatSolution fs = solve_float(model);
                const FixResult fx = constrained_search(fs, cfg.search);
                record(tr.hybrid, fs, fx);
            } catch (const std::exception& e) {
                tr.hybrid.solver_error = true;
                tr.hybrid.error = e.what();
            }
        } else {
            tr.hybrid = gnss_solve; // no stations: the hybrid model degenerates
        }
    }

    if (tr.fiveg_only.attempted) {
        try {
            So3FitOptions opt;
            opt.gradient_tol = cfg.search.so3_tol;
            opt.max_iterations = cfg.search.so3_max_iterations;
            const Rotation r = fiveg_only_solve(*aoa, opt);
            tr.fiveg_only.fixed_r_error_frob = frobenius_error(r.matrix(), r_true.matrix());
            tr.fiveg_only.fixed_r_error_deg = geodesic_angle_deg(r, r_true);
        } catch (const std::exception& e) {
            tr.fiveg_only.solver_error = true;
            tr.fiveg_only.error = e.what();
        }
    }
    return tr;
}

struct MethodAggregate {
    int n_trials = 0;     // attempted
    int n_failed = 0;     // solver errors
    int n_bound_open = 0; // incumbent returned without optimality certificate
    int n_success = 0;
    double success_rate = detail::dnan();
    double float_z_mean = detail::dnan();
    double float_z_rmse = detail::dnan();
    double float_r_mean = detail::dnan();
    double float_r_rmse = detail::dnan();
    double fixed_r_frob_mean = detail::dnan();
    double fixed_r_frob_rmse = detail::dnan();
    double fixed_r_deg_mean = detail::dnan();
    double fixed_r_deg_rmse = detail::dnan();
};

struct AggregateMetrics {
    int n_trials = 0;
    MethodAggregate hybrid;
    MethodAggregate gnss_only;
    MethodAggregate fiveg_only;
};

namespace detail {

inline MethodAggregate aggregate_method(const std::vector<TrialResult>& trials,
                                        MethodTrial TrialResult::* member, bool has_integers) {
    MethodAggregate a;
    double sz = 0, sz2 = 0, sr = 0, sr2 = 0, sf = 0, sf2 = 0, sd = 0, sd2 = 0;
    int n_inc = 0;
    for (const TrialResult& t : trials) {
        const MethodTrial& m = t.*member;
        if (!m.attempted) continue;
        ++a.n_trials;
        if (m.solver_error) {
            ++a.n_failed;
            continue;
        }
        if (!m.bound_closed) ++a.n_bound_open;
        if (m.success) ++a.n_success;
        ++n_inc;
        if (has_integers) {
            sz += m.float_z_error;
            sz2 += m.float_z_error * m.float_z_error;
            sr += m.float_r_error;
            sr2 += m.float_r_error * m.float_r_error;
        }
        sf += m.fixed_r_error_frob;
        sf2 += m.fixed_r_error_frob * m.fixed_r_error_frob;
        sd += m.fixed_r_error_deg;
        sd2 += m.fixed_r_error_deg * m.fixed_r_error_deg;
    }
    if (a.n_trials > 0 && has_integers)
        a.success_rate = static_cast<double>(a.n_success) / a.n_trials;
    if (n_inc > 0) {
        if (has_integers) {
            a.float_z_mean = sz / n_inc;
            a.float_z_rmse = std::sqrt(sz2 / n_inc);
            a.float_r_mean = sr / n_inc;
            a.float_r_rmse = std::sqrt(sr2 / n_inc);
        }
        a.fixed_r_frob_mean = sf / n_inc;
        a.fixed_r_frob_rmse = std::sqrt(sf2 / n_inc);
        a.fixed_r_deg_mean = sd / n_inc;
        a.fixed_r_deg_rmse = std::sqrt(sd2 / n_inc);
    }
    return a;
}

} // namespace detail

inline AggregateMetrics aggregate(const std::vector<TrialResult>& trials) {
    AggregateMetrics agg;
    agg.n_trials = static_cast<int>(trials.size());
    agg.hybrid = detail::aggregate_method(trials, &TrialResult::hybrid, true);
    agg.gnss_only = detail::aggregate_method(trials, &TrialResult::gnss_only, true);
    agg.fiveg_only = detail::aggregate_method(trials, &TrialResult::fiveg_only, false);
    return agg;
}

struct CampaignResult {
    std::vector<TrialResult> trials;
    AggregateMetrics metrics;
};

inline CampaignResult run_campaign(const ScenarioConfig& cfg, int n_trials, int jobs = 1,
                                   const MethodSelection& methods = {}) {
    if (n_trials < 1) throw Error(ErrorCode::configuration, "n_trials must be >= 1");
    cfg.validate();
    std::vector<TrialResult> trials(n_trials);
    const int workers = std::min(std::max(1, jobs), n_trials);
    if (workers == 1) {
        for (int i = 0; i < n_trials; ++i) trials[i] = run_trial(cfg, cfg.seed + i, methods);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_trials) return;
                trials[i] = run_trial(cfg, cfg.seed + i, methods);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    CampaignResult res;
    res.trials = std::move(trials);
    res.metrics = aggregate(res.trials);
    return res;
}

struct TableGrid {
    std::vector<int> sat_counts; // rows: tracked satellites
    std::vector<int> bs_counts;  // columns: station count, 0 = carrier/code only
    MatX success;                // percent
    MatX error_deg;              // mean fixed attitude error, geodesic degrees
};

// One campaign per grid cell, all cells sharing the same base seed so that a
// cell differs from its neighbours only through the parameter under study.
inline TableGrid sweep_tables(const ScenarioConfig& base, const std::vector<int>& sat_range,
                              const std::vector<int>& bs_range, int n_trials, int jobs = 1) {
    if (sat_range.empty() || bs_range.empty())
        throw Error(ErrorCode::configuration, "table ranges must be nonempty");
    TableGrid grid;
    grid.sat_counts = sat_range;
    grid.bs_counts = bs_range;
    grid.success.resize(sat_range.size(), bs_range.size());
    grid.error_deg.resize(sat_range.size(), bs_range.size());
    const MethodSelection hybrid_only{false, true, false};
    for (std::size_t r = 0; r < sat_range.size(); ++r)
        for (std::size_t c = 0; c < bs_range.size(); ++c) {
            ScenarioConfig cfg = base;
            cfg.n_satellites = sat_range[r];
            cfg.n_bs = bs_range[c];
            const CampaignResult res = run_campaign(cfg, n_trials, jobs, hybrid_only);
            const MethodAggregate& m = res.metrics.hybrid;
            grid.success(r, c) = 100.0 * m.success_rate;
            grid.error_deg(r, c) = m.fixed_r_deg_mean;
        }
    return grid;
}

struct FigureRow {
    std::string setup;
    std::string method;
    std::string metric;
    double x = 0.0; // trial index, station count, or -1 for aggregates
    double value = 0.0;
};

namespace detail {

struct RadioSetup {
    const char* label;
    int n_transmissions;
    double tx_power_dbm;
};

inline void push_aggregate_rows(std::vector<FigureRow>& rows, const char* setup,
                                const char* method, const MethodAggregate& m, bool has_integers) {
    if (has_integers) {
        rows.push_back({setup, method, "float_Z_mean", -1.0, m.float_z_mean});
        rows.push_back({setup, method, "float_R_mean", -1.0, m.float_r_mean});
    }
    rows.push_back({setup, method, "fixed_R_frob_mean", -1.0, m.fixed_r_frob_mean});
    rows.push_back({setup, method, "fixed_R_deg_mean", -1.0, m.fixed_r_deg_mean});
}

} // namespace detail

// Row sets behind the three study figures; `x` carries the per-trial index
// (figure 3), the station count (figure 4), or -1 for aggregate rows.
inline std::vector<FigureRow> figure_data(int figure_id, const ScenarioConfig& base, int n_trials,
                                          int jobs = 1) {
    std::vector<FigureRow> rows;
    if (figure_id == 2) {
        const detail::RadioSetup setups[] = {
            {"T64_P17", 64, 17.0}, {"T256_P17", 256, 17.0}, {"T256_P20", 256, 20.0}};
        for (const auto& s : setups) {
            ScenarioConfig cfg = base;
            cfg.n_bs = 1;
            cfg.radio.n_transmissions = s.n_transmissions;
            cfg.radio.tx_power_dbm = s.tx_power_dbm;
            const CampaignResult res = run_campaign(cfg, n_trials, jobs);
            detail::push_aggregate_rows(rows, s.label, "gnss_only", res.metrics.gnss_only, true);
            detail::push_aggregate_rows(rows, s.label, "hybrid", res.metrics.hybrid, true);
        }
    } else if (figure_id == 3) {
        const detail::RadioSetup setups[] = {{"T64_P17", 64, 17.0}, {"T128_P20", 128, 20.0}};
        for (const auto& s : setups) {
            ScenarioConfig cfg = base;
            cfg.n_bs = 3;
            cfg.radio.n_transmissions = s.n_transmissions;
            cfg.radio.tx_power_dbm = s.tx_power_dbm;
            const CampaignResult res = run_campaign(cfg, n_trials, jobs);
            const auto per_trial = [&](const char* method, MethodTrial TrialResult::* member) {
                for (std::size_t i = 0; i < res.trials.size(); ++i) {
                    const MethodTrial& m = res.trials[i].*member;
                    if (m.included())
                        rows.push_back({s.label, method, "fixed_R_frob", static_cast<double>(i),
                                        m.fixed_r_error_frob});
                }
            };
            per_trial("gnss_only", &TrialResult::gnss_only);
            per_trial("fiveg_only", &TrialResult::fiveg_only);
            per_trial("hybrid", &TrialResult::hybrid);
            detail::push_aggregate_rows(rows, s.label, "gnss_only", res.metrics.gnss_only, false);
            detail::push_aggregate_rows(rows, s.label, "fiveg_only", res.metrics.fiveg_only, false);
            detail::push_aggregate_rows(rows, s.label, "hybrid", res.metrics.hybrid, false);
        }
    } else if (figure_id == 4) {
        const detail::RadioSetup setups[] = {
            {"T64_P17", 64, 17.0}, {"T128_P17", 128, 17.0}, {"T128_P20", 128, 20.0}};
        const int bs_counts[] = {2, 4, 6, 8};
        for (const auto& s : setups)
            for (const int l : bs_counts) {
                ScenarioConfig cfg = base;
                cfg.n_bs = l;
                cfg.radio.n_transmissions = s.n_transmissions;
                cfg.radio.tx_power_dbm = s.tx_power_dbm;
                const CampaignResult res = run_campaign(cfg, n_trials, jobs);
                const auto push = [&](const char* method, const MethodAggregate& m) {
                    rows.push_back({s.label, method, "fixed_R_deg_rmse", static_cast<double>(l),
                                    m.fixed_r_deg_rmse});
                    rows.push_back({s.label, method, "fixed_R_frob_rmse", static_cast<double>(l),
                                    m.fixed_r_frob_rmse});
                };
                push("gnss_only", res.metrics.gnss_only);
                push("fiveg_only", res.metrics.fiveg_only);
                push("hybrid", res.metrics.hybrid);
            }
    } else {
        throw Error(ErrorCode::configuration, "figure id must be 2, 3 or 4");
    }
    return rows;
}

} // namespace attfuse

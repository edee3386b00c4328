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
// Batch front end. Subcommands:
//   simulate <config>   one campaign -> aggregate.csv, trials.csv, manifest
//   table --table N     preset grids behind the study tables (2..7)
//   figure --figure N   long-format data behind the study figures (2..4)
//   validate            self-checks: invariants and independent oracles
//
// Exit codes: 0 ok, 1 solver-level failure or failed check, 2 bad usage or
// invalid configuration.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attfuse/config.hpp"
#include "attfuse/csvio.hpp"
#include "attfuse/simulation.hpp"

namespace {

using namespace attfuse;

struct CommonOpts {
    std::string out = ".";
    std::uint64_t seed = 0;
    int trials = 0;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "base seed (default 0 / config value)");
    cmd->add_option("--trials", o.trials, "trial count override");
    cmd->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
}

std::filesystem::path prepare_out(const std::string& out) {
    std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    return dir;
}

ManifestInfo start_manifest(std::string command, std::string config_path, std::uint64_t seed,
                            int trials, int jobs) {
    ManifestInfo m;
    m.command = std::move(command);
    m.config_path = std::move(config_path);
    m.seed = seed;
    m.trials = trials;
    m.jobs = jobs;
    m.started_unix = static_cast<std::int64_t>(std::time(nullptr));
    return m;
}

void finish_manifest(ManifestInfo& m, const std::filesystem::path& dir) {
    m.finished_unix = static_cast<std::int64_t>(std::time(nullptr));
    write_text_atomic(dir / "manifest", manifest_text(m));
}

int cmd_simulate(const std::string& config_path, const CommonOpts& o, bool seed_set,
                 bool trials_set) {
    ScenarioConfig cfg = load_config(config_path);
    if (seed_set) cfg.seed = o.seed;
    const int n_trials = trials_set ? o.trials : cfg.n_trials;

    const auto dir = prepare_out(o.out);
    ManifestInfo manifest =
        start_manifest("simulate " + config_path, config_path, cfg.seed, n_trials, o.jobs);

    const CampaignResult res = run_campaign(cfg, n_trials, o.jobs);

    write_text_atomic(dir / "aggregate.csv", aggregate_csv(res.metrics));
    write_text_atomic(dir / "trials.csv", trials_csv(res.trials));
    manifest.outputs = {"aggregate.csv", "trials.csv"};
    finish_manifest(manifest, dir);

    bool any_result = false;
    for (const TrialResult& t : res.trials)
        for (const MethodTrial* m : {&t.hybrid, &t.gnss_only, &t.fiveg_only})
            if (m->included()) any_result = true;
    if (!any_result) {
        std::fprintf(stderr, "simulate: every attempted solve failed (first error: %s)\n",
                     res.trials.front().gnss_only.error.c_str());
        return 1;
    }
    return 0;
}

// Presets behind the study tables: {2,3} sigma 0.03 m / T 64, {4,5} sigma
// 0.03 m / T 512, {6,7} sigma 0.003 m / T 512. Even ids carry the success
// grids, odd ids the error grids; both files come from one shared campaign.
int cmd_table(int table_id, const CommonOpts& o) {
    ScenarioConfig base;
    base.seed = o.seed;
    base.sigma_phase = table_id <= 3 ? 0.03 : (table_id <= 5 ? 0.03 : 0.003);
    base.radio.n_transmissions = table_id <= 3 ? 64 : 512;
    // The fine-noise grids run the search deeper: at this noise the argmin is
    // the truth essentially always, but a rare noise-tail trial needs more
    // than the default candidate budget before the certificate closes.
    if (table_id >= 6) base.search.max_candidates = 20000;
    const int n_trials = o.trials > 0 ? o.trials : 100;

    const auto dir = prepare_out(o.out);
    ManifestInfo manifest = start_manifest("table " + std::to_string(table_id), "(preset)",
                                           base.seed, n_trials, o.jobs);

    const TableGrid grid = sweep_tables(base, {5, 6, 7, 8}, {0, 1, 2, 3, 4}, n_trials, o.jobs);

    const std::string stem = "table" + std::to_string(table_id);
    write_text_atomic(dir / (stem + "_success.csv"), table_csv(grid, true));
    write_text_atomic(dir / (stem + "_error.csv"), table_csv(grid, false));
    manifest.outputs = {stem + "_success.csv", stem + "_error.csv"};
    finish_manifest(manifest, dir);
    return 0;
}

int cmd_figure(int figure_id, const CommonOpts& o) {
    ScenarioConfig base;
    base.seed = o.seed;
    const int n_trials = o.trials > 0 ? o.trials : 100;

    const auto dir = prepare_out(o.out);
    ManifestInfo manifest = start_manifest("figure " + std::to_string(figure_id), "(preset)",
                                           base.seed, n_trials, o.jobs);

    const std::vector<FigureRow> rows = figure_data(figure_id, base, n_trials, o.jobs);

    const std::string name = "fig" + std::to_string(figure_id) + ".csv";
    write_text_atomic(dir / name, figure_csv(rows));
    manifest.outputs = {name};
    finish_manifest(manifest, dir);
    return 0;
}

// ----------------------------------------------------------------------
// validate: named self-checks, one PASS/FAIL line each.

struct Checker {
    int failures = 0;
    std::string first_failed;

    template <typename Fn>
    void run(const char* name, Fn&& fn) {
        std::string detail;
        bool ok = false;
        try {
            ok = fn(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        if (ok) {
            std::printf("PASS %s\n", name);
        } else {
            std::printf("FAIL %s: %s\n", name, detail.empty() ? "check failed" : detail.c_str());
            if (failures == 0) first_failed = name;
            ++failures;
        }
    }
};

struct SmallScenario {
    GnssDesign design;      // estimation-side design (honours the fault hook)
    GnssDesign sim_design;  // clean design used to synthesize the epoch
    BaselineSet baselines;
    GnssEpoch epoch;
    Rotation r_true;
};

SmallScenario make_scenario(std::uint64_t seed, int n_sats, int n_baselines, double sigma) {
    SmallScenario s;
    Rng crng = substream(seed, 1);
    const Constellation cons = synth_constellation(n_sats, crng);
    Rng arng = substream(seed, 2);
    s.r_true = random_rotation(arng);
    Rng zrng = substream(seed, 3);
    const MatXi z_true = sample_ambiguities(n_sats - 1, n_baselines, 100, zrng);
    s.baselines = BaselineSet(MatX(Mat3::Identity().leftCols(n_baselines)));
    const GnssNoiseModel noise = GnssNoiseModel::from_sigma_phase(sigma);
    const bool fault = detail::g0_sign_flip;
    detail::g0_sign_flip = false;
    s.sim_design = build_design(cons, s.baselines, noise);
    detail::g0_sign_flip = fault;
    s.design = build_design(cons, s.baselines, noise);
    Rng grng = substream(seed, 4);
    s.epoch = simulate_epoch(s.sim_design, s.baselines, s.r_true, z_true, grng, false);
    return s;
}

// Ambiguity-box reference: exhaustive minimization over the +-4 integer box
// around the rounded float solution, fits evaluated in ascending-distance
// order with the sound "distance alone exceeds the incumbent" cutoff.
struct BoxReference {
    VecXi z_best;
    double total = 0.0;
    double d_best = 0.0;
};

BoxReference box_reference(const FloatSolution& fs) {
    const int n = static_cast<int>(fs.z_float.size());
    const VecXi center = fs.z_float.array().round().cast<int>();
    const Eigen::LLT<MatX> llt(fs.q_z);
    std::vector<std::pair<double, VecXi>> box;
    VecXi z = center.array() - 4;
    for (;;) {
        const VecX diff = fs.z_float - z.cast<double>();
        const double d = diff.dot(llt.solve(diff));
        box.emplace_back(d, z);
        int k = 0;
        while (k < n) {
            if (z[k] < center[k] + 4) {
                ++z[k];
                break;
            }
            z[k] = center[k] - 4;
            ++k;
        }
        if (k == n) break;
    }
    std::sort(box.begin(), box.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const AttitudeConditioner cond = make_conditioner(fs);
    BoxReference ref;
    ref.d_best = box.front().first;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [d, zc] : box) {
        if (d >= best) break;
        const Mat3 rc = conditional_attitude(cond, zc);
        double m;
        try {
            m = weighted_so3_fix(rc, cond.w_cond).cost;
        } catch (const NonConvergenceError& e) {
            m = e.best_cost;
        }
        if (d + m < best) {
            best = d + m;
            ref.z_best = zc;
        }
    }
    ref.total = best;
    return ref;
}

void run_properties(Checker& ck) {
    ck.run("trial_determinism", [](std::string& why) {
        ScenarioConfig cfg;
        const TrialResult a = run_trial(cfg, 42), b = run_trial(cfg, 42);
        if (a.hybrid.fixed_r_error_frob != b.hybrid.fixed_r_error_frob ||
            a.gnss_only.float_z_error != b.gnss_only.float_z_error) {
            why = "repeated trial differs";
            return false;
        }
        return true;
    });
    ck.run("dd_covariance_structure", [](std::string& why) {
        Rng rng(7);
        const Constellation cons = synth_constellation(5, rng);
        const BaselineSet f;
        const GnssDesign d = build_design(cons, f, GnssNoiseModel{});
        if ((d.P_M - (0.5 * (MatX::Identity(3, 3) + MatX::Ones(3, 3)))).norm() > 1e-12) {
            why = "baseline correlation matrix off";
            return false;
        }
        if (d.Q_Y.llt().info() != Eigen::Success) {
            why = "observation covariance not SPD";
            return false;
        }
        return true;
    });
    ck.run("decorrelation_reduction", [](std::string& why) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const SmallScenario s = make_scenario(seed, 5, 3, 0.01);
            const HybridModel model = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F);
            const FloatSolution fs = solve_float(model);
            const Decorrelation dec = decorrelate(fs.q_z);
            if (std::abs(std::abs(dec.transform.determinant()) - 1.0) > 1e-9) {
                why = "transform not unimodular";
                return false;
            }
            const MatX back = dec.transform.transpose() * fs.q_z * dec.transform;
            if ((back - dec.q_reduced).norm() > 1e-9 * dec.q_reduced.norm()) {
                why = "reduced covariance mismatch";
                return false;
            }
        }
        return true;
    });
    ck.run("conditional_decomposition", [](std::string& why) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const SmallScenario s = make_scenario(seed, 6, 3, 0.005);
            const HybridModel model = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F);
            const FloatSolution fs = solve_float(model);
            const AttitudeConditioner cond = make_conditioner(fs);
            Rng rng(seed * 31 + 5);
            VecXi z(fs.z_float.size());
            for (int i = 0; i < z.size(); ++i)
                z[i] = static_cast<int>(std::lround(fs.z_float[i])) + rng.uniform_int(-2, 2);
            const Mat3 r = random_rotation(rng).matrix();
            VecX x(fs.z_float.size() + 9);
            x << z.cast<double>(), Eigen::Map<const VecX>(r.data(), 9);
            VecX xf(x.size());
            xf << fs.z_float, Eigen::Map<const VecX>(fs.r_float.data(), 9);
            const MatX normal = model.normal_gnss + model.normal_fiveg;
            const double full = (x - xf).dot(normal * (x - xf));
            const VecX dz = fs.z_float - z.cast<double>();
            const double dterm = dz.dot(fs.q_z.llt().solve(dz));
            const Mat3 rc = conditional_attitude(cond, z);
            const VecX dr =
                Eigen::Map<const VecX>(r.data(), 9) - Eigen::Map<const VecX>(rc.data(), 9);
            const double rterm = dr.dot(cond.w_cond * dr);
            if (std::abs(full - dterm - rterm) > 1e-6 * std::max(1.0, full)) {
                why = "residual decomposition violated";
                return false;
            }
        }
        return true;
    });
    ck.run("information_additivity", [](std::string& why) {
        const SmallScenario s = make_scenario(3, 5, 3, 0.001);
        const BsLayout layout = bs_layout(3, Vec3::Zero());
        Rng arng = substream(3, 5);
        const AoaSet aoa = simulate_aoa(layout, RadioConfig{}, s.r_true, arng, false);
        const HybridModel hybrid = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F, &aoa);
        const HybridModel gnss = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F);
        const MatX nh = hybrid.normal_gnss + hybrid.normal_fiveg;
        const MatX ng = gnss.normal_gnss;
        if (hybrid.normal_gnss != gnss.normal_gnss) {
            why = "carrier/code block changed by stations";
            return false;
        }
        const double th = (nh.inverse()).trace(), tg = (ng.inverse()).trace();
        if (!(th <= tg * (1.0 + 1e-9))) {
            why = "hybrid covariance trace not smaller";
            return false;
        }
        return true;
    });
    ck.run("exact_fit", [](std::string& why) {
        ScenarioConfig cfg;
        cfg.noiseless = true;
        cfg.n_bs = 2;
        const TrialResult t = run_trial(cfg, 9);
        if (!t.hybrid.success || t.hybrid.fixed_r_error_frob > 1e-6 ||
            t.gnss_only.fixed_r_error_frob > 1e-6) {
            why = "noiseless run did not recover the truth";
            return false;
        }
        return true;
    });
    ck.run("aggregate_rmse_identity", [](std::string& why) {
        ScenarioConfig cfg;
        const CampaignResult res = run_campaign(cfg, 20, 1);
        double s2 = 0;
        int n = 0;
        for (const TrialResult& t : res.trials)
            if (t.hybrid.included()) {
                s2 += t.hybrid.fixed_r_error_frob * t.hybrid.fixed_r_error_frob;
                ++n;
            }
        const double rmse = res.metrics.hybrid.fixed_r_frob_rmse;
        if (std::abs(rmse * rmse - s2 / n) > 1e-12 * std::max(1.0, s2 / n)) {
            why = "rmse identity violated";
            return false;
        }
        return true;
    });
    ck.run("paired_hybrid_improvement", [](std::string& why) {
        ScenarioConfig cfg;
        const CampaignResult res = run_campaign(cfg, 100, 1);
        if (!(res.metrics.hybrid.float_r_mean < res.metrics.gnss_only.float_r_mean)) {
            why = "hybrid float attitude not better on average";
            return false;
        }
        return true;
    });
}

void run_oracles(Checker& ck) {
    ck.run("ils_box_oracle_live", [](std::string& why) {
        for (std::uint64_t seed = 0; seed < 12; ++seed) {
            const SmallScenario s = make_scenario(seed, 3, 3, 0.003);
            const HybridModel model = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F);
            const FloatSolution fs = solve_float(model);
            const BoxReference ref = box_reference(fs);
            const auto top = ils_enumerate(fs.z_float, fs.q_z, 1);
            if (std::abs(top[0].distance - ref.d_best) > 1e-9 * std::max(1.0, ref.d_best)) {
                why = "lattice search missed the box minimum distance";
                return false;
            }
            const FixResult fx = constrained_search(fs);
            if (std::abs(fx.cost - ref.total) > 1e-9 * std::max(1.0, ref.total) ||
                Eigen::Map<const VecXi>(fx.z_fixed.data(), fx.z_fixed.size()) != ref.z_best) {
                why = "constrained search disagrees with box reference (seed " +
                      std::to_string(seed) + ")";
                return false;
            }
        }
        return true;
    });
    ck.run("fim_finite_difference", [](std::string& why) {
        const RadioConfig rc;
        const ArrayGeometry arr = upa_geometry(rc);
        Rng rng(17);
        for (int c = 0; c < 5; ++c) {
            const Vec3 t = (Vec3() << rng.normal(), rng.normal(), rng.normal()).finished().normalized();
            if (std::abs(t.z()) > 0.95) continue;
            const cplx gain = channel_gain(150.0, rc.carrier_hz, rng);
            const Mat2 fim = aoa_fim(arr, rc, t, gain);
            const auto ang = detail::angles_from_direction(t);
            const double h = 1e-6;
            const auto steer = [&](double th, double ph) {
                return steering_response(arr, rc.carrier_hz, detail::direction_from_angles(th, ph));
            };
            const VecXc s0 = steer(ang.theta, ang.phi);
            MatXc d(s0.size(), 4);
            d.col(0) = gain * (steer(ang.theta + h, ang.phi) - steer(ang.theta - h, ang.phi)) / (2 * h);
            d.col(1) = gain * (steer(ang.theta, ang.phi + h) - steer(ang.theta, ang.phi - h)) / (2 * h);
            d.col(2) = s0;
            d.col(3) = cplx(0, 1) * s0;
            const double scale = 2.0 * rc.n_transmissions * rc.tx_power_watts() /
                                 noise_power(rc.noise_psd_dbm_hz, rc.bandwidth_hz);
            const Eigen::Matrix4d full = scale * Eigen::Matrix4cd(d.adjoint() * d).real();
            const Eigen::Matrix2d efim =
                full.topLeftCorner<2, 2>() -
                full.topRightCorner<2, 2>() *
                    full.bottomRightCorner<2, 2>().inverse() *
                    full.bottomLeftCorner<2, 2>();
            if ((efim - fim).norm() > 1e-4 * fim.norm()) {
                why = "analytic information matrix deviates from finite differences";
                return false;
            }
        }
        return true;
    });
    ck.run("so3_identity_weight", [](std::string& why) {
        Rng rng(23);
        for (int c = 0; c < 20; ++c) {
            Mat3 t;
            for (int i = 0; i < 9; ++i) t.data()[i] = 2.0 * rng.normal();
            if (std::abs(t.determinant()) < 1e-3) continue;
            const Rotation svd = project_to_so3(t);
            const Rotation fit = weighted_so3_fix(t, MatX(MatX::Identity(9, 9))).rotation;
            if (geodesic_angle_deg(svd, fit) > 1e-8) {
                why = "identity-weight fit deviates from projection";
                return false;
            }
        }
        return true;
    });
    ck.run("zero_noise_recovery", [](std::string& why) {
        for (std::uint64_t seed = 100; seed < 105; ++seed) {
            ScenarioConfig cfg;
            cfg.noiseless = true;
            const TrialResult t = run_trial(cfg, seed);
            if (!t.hybrid.success || t.hybrid.fixed_r_error_frob > 1e-8) {
                why = "noiseless pipeline inexact at seed " + std::to_string(seed);
                return false;
            }
        }
        return true;
    });
    // Frozen regression fixtures: healthy builds resolve these seeds exactly,
    // so the fixed integers must equal the simulated truth. An injected
    // estimator-side fault leaves the self-consistent live checks above green
    // but breaks these.
    for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
        const std::string name = "ils_fixture_seed" + std::to_string(seed);
        ck.run(name.c_str(), [seed](std::string& why) {
            const SmallScenario s = make_scenario(seed, 6, 3, 0.003);
            const HybridModel model = assemble_hybrid(s.design, s.epoch.Y, s.baselines.F);
            const FixResult fx = constrained_search(solve_float(model));
            if (fx.z_fixed != s.epoch.Z_true) {
                why = "fixture ambiguities not recovered";
                return false;
            }
            if (geodesic_angle_deg(fx.r_fixed, s.epoch.R_true) > 1.0) {
                why = "fixture attitude off by more than a degree";
                return false;
            }
            return true;
        });
    }
}

int cmd_validate(const std::string& suite, const std::string& fault) {
    if (fault == "g0-sign-flip") detail::g0_sign_flip = true;
    Checker ck;
    if (suite == "properties" || suite == "all") run_properties(ck);
    if (suite == "oracles" || suite == "all") run_oracles(ck);
    if (ck.failures > 0) {
        std::fprintf(stderr, "validate: %d check(s) failed, first: %s\n", ck.failures,
                     ck.first_failed.c_str());
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid carrier-phase / angle-of-arrival attitude toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string config_path;
    int table_id = 2;
    int figure_id = 2;
    std::string suite = "all";
    std::string fault;

    CLI::App* sim = app.add_subcommand("simulate", "run one Monte-Carlo campaign");
    sim->add_option("config", config_path, "scenario configuration (JSON)")->required();
    add_common(sim, opts);

    CLI::App* tab = app.add_subcommand("table", "run a preset table grid");
    tab->add_option("--table", table_id, "table id")->required()->check(CLI::Range(2, 7));
    add_common(tab, opts);

    CLI::App* fig = app.add_subcommand("figure", "run a preset figure sweep");
    fig->add_option("--figure", figure_id, "figure id")->required()->check(CLI::Range(2, 4));
    add_common(fig, opts);

    CLI::App* val = app.add_subcommand("validate", "run built-in self checks");
    val->add_option("--suite", suite, "properties | oracles | all")
        ->check(CLI::IsMember({"properties", "oracles", "all"}))
        ->capture_default_str();
    val->add_option("--inject-fault", fault, "debug fault hook")
        ->check(CLI::IsMember({"g0-sign-flip"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, opts, sim->count("--seed") > 0,
                                sim->count("--trials") > 0);
        if (tab->parsed()) return cmd_table(table_id, opts);
        if (fig->parsed()) return cmd_figure(figure_id, opts);
        if (val->parsed()) return cmd_validate(suite, fault);
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return e.code() == ErrorCode::configuration ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "attfuse/simulation.hpp"

using namespace attfuse;

namespace {

bool same_trial(const MethodTrial& a, const MethodTrial& b) {
    const auto eq = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    return a.attempted == b.attempted && a.solver_error == b.solver_error &&
           a.success == b.success && a.bound_closed == b.bound_closed &&
           eq(a.float_z_error, b.float_z_error) && eq(a.float_r_error, b.float_r_error) &&
           eq(a.fixed_r_error_frob, b.fixed_r_error_frob) &&
           eq(a.fixed_r_error_deg, b.fixed_r_error_deg);
}

} // namespace

TEST_CASE("trials are a pure function of config and seed") {
    ScenarioConfig cfg;
    cfg.n_bs = 2;
    const TrialResult a = run_trial(cfg, 1234);
    const TrialResult b = run_trial(cfg, 1234);
    REQUIRE(same_trial(a.hybrid, b.hybrid));
    REQUIRE(same_trial(a.gnss_only, b.gnss_only));
    REQUIRE(same_trial(a.fiveg_only, b.fiveg_only));

    const TrialResult c = run_trial(cfg, 1235);
    REQUIRE(c.hybrid.fixed_r_error_frob != a.hybrid.fixed_r_error_frob);
}

TEST_CASE("noiseless trials recover the truth to numerical precision") {
    ScenarioConfig cfg;
    cfg.noiseless = true;
    cfg.n_bs = 2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TrialResult t = run_trial(cfg, seed);
        REQUIRE(t.hybrid.success);
        REQUIRE(t.gnss_only.success);
        REQUIRE(t.hybrid.fixed_r_error_frob < 1e-6);
        REQUIRE(t.gnss_only.fixed_r_error_frob < 1e-6);
        REQUIRE(t.fiveg_only.fixed_r_error_frob < 1e-6);
        REQUIRE(t.hybrid.float_z_error < 1e-6);
    }
}

TEST_CASE("sigma zero behaves like the noiseless switch") {
    ScenarioConfig a, b;
    a.sigma_phase = 0.0;
    b.noiseless = true;
    const TrialResult ta = run_trial(a, 7);
    const TrialResult tb = run_trial(b, 7);
    REQUIRE(ta.hybrid.success);
    REQUIRE(ta.hybrid.fixed_r_error_frob < 1e-6);
    REQUIRE(tb.hybrid.success);
}

TEST_CASE("campaigns are worker-count invariant") {
    ScenarioConfig cfg;
    cfg.seed = 42;
    const CampaignResult serial = run_campaign(cfg, 24, 1);
    const CampaignResult parallel = run_campaign(cfg, 24, 8);
    REQUIRE(serial.trials.size() == parallel.trials.size());
    for (size_t i = 0; i < serial.trials.size(); ++i) {
        REQUIRE(serial.trials[i].seed == parallel.trials[i].seed);
        REQUIRE(same_trial(serial.trials[i].hybrid, parallel.trials[i].hybrid));
        REQUIRE(same_trial(serial.trials[i].gnss_only, parallel.trials[i].gnss_only));
    }
    REQUIRE(serial.metrics.hybrid.fixed_r_deg_rmse == parallel.metrics.hybrid.fixed_r_deg_rmse);
}

TEST_CASE("method selection leaves the shared draws untouched") {
    ScenarioConfig cfg;
    cfg.seed = 9;
    cfg.n_bs = 2;
    MethodSelection hybrid_only;
    hybrid_only.gnss_only = false;
    hybrid_only.fiveg_only = false;
    const CampaignResult full = run_campaign(cfg, 15, 1);
    const CampaignResult sel = run_campaign(cfg, 15, 1, hybrid_only);
    for (size_t i = 0; i < full.trials.size(); ++i) {
        REQUIRE(same_trial(full.trials[i].hybrid, sel.trials[i].hybrid));
        REQUIRE_FALSE(sel.trials[i].gnss_only.attempted);
        REQUIRE_FALSE(sel.trials[i].fiveg_only.attempted);
    }
}

TEST_CASE("station count does not perturb the carrier-only estimator") {
    // gnss_only shares its draws across n_bs, so its per-trial numbers must
    // be bit-identical between L = 1 and L = 3.
    ScenarioConfig l1, l3;
    l1.n_bs = 1;
    l3.n_bs = 3;
    l1.seed = l3.seed = 21;
    const CampaignResult a = run_campaign(l1, 10, 1);
    const CampaignResult b = run_campaign(l3, 10, 1);
    for (size_t i = 0; i < a.trials.size(); ++i)
        REQUIRE(same_trial(a.trials[i].gnss_only, b.trials[i].gnss_only));
}

TEST_CASE("hybrid never trails the carrier-only float solution") {
    // Paired comparison on identical draws: adding direction information
    // tightens the float attitude in every single trial.
    ScenarioConfig cfg;
    cfg.seed = 33;
    const CampaignResult res = run_campaign(cfg, 60, 1);
    int improved = 0;
    for (const TrialResult& t : res.trials) {
        REQUIRE(t.hybrid.included());
        REQUIRE(t.gnss_only.included());
        if (t.hybrid.float_r_error <= t.gnss_only.float_r_error) ++improved;
    }
    // individual realizations may go either way; the bulk and the mean not
    REQUIRE(improved >= 50);
    REQUIRE(res.metrics.hybrid.float_r_mean < res.metrics.gnss_only.float_r_mean);
}

TEST_CASE("aggregates follow their definitions") {
    ScenarioConfig cfg;
    cfg.seed = 11;
    cfg.n_bs = 2;
    const CampaignResult res = run_campaign(cfg, 30, 1);
    const MethodAggregate& h = res.metrics.hybrid;
    REQUIRE(h.n_trials == 30);
    REQUIRE(h.n_failed == 0);

    double s = 0, s2 = 0;
    int n = 0, succ = 0;
    for (const TrialResult& t : res.trials) {
        if (!t.hybrid.included()) continue;
        s += t.hybrid.fixed_r_error_deg;
        s2 += t.hybrid.fixed_r_error_deg * t.hybrid.fixed_r_error_deg;
        ++n;
        if (t.hybrid.success) ++succ;
    }
    REQUIRE(h.fixed_r_deg_mean == Catch::Approx(s / n).epsilon(1e-12));
    REQUIRE(h.fixed_r_deg_rmse == Catch::Approx(std::sqrt(s2 / n)).epsilon(1e-12));
    REQUIRE(h.success_rate == Catch::Approx(100.0 * succ / n).epsilon(1e-12));
}

TEST_CASE("station-free configs alias hybrid to the carrier solution") {
    ScenarioConfig cfg;
    cfg.n_bs = 0;
    const TrialResult t = run_trial(cfg, 4);
    REQUIRE(same_trial(t.hybrid, t.gnss_only));
    REQUIRE_FALSE(t.fiveg_only.attempted); // needs two stations
}

TEST_CASE("explicit constellations and fixed attitude are honoured") {
    ScenarioConfig cfg;
    cfg.n_satellites = 5;
    cfg.constellation.az_el_deg = {
        {10.0, 30.0}, {80.0, 70.0}, {200.0, 45.0}, {255.0, 25.0}, {320.0, 55.0}};
    EulerAngles e;
    e.yaw = 0.3;
    e.pitch = -0.2;
    e.roll = 0.1;
    cfg.attitude_truth = e;
    cfg.noiseless = true;
    const TrialResult a = run_trial(cfg, 1);
    const TrialResult b = run_trial(cfg, 2);
    // with geometry, attitude, and noise pinned, different seeds only move
    // the ambiguities; both must still succeed exactly
    REQUIRE(a.hybrid.success);
    REQUIRE(b.hybrid.success);

    cfg.constellation.az_el_deg.pop_back();
    REQUIRE_THROWS_AS(run_trial(cfg, 1), Error);
}

TEST_CASE("fixed constellation policy reuses one geometry across trials") {
    ScenarioConfig cfg;
    cfg.constellation.policy = ConstellationSpec::Policy::fixed;
    cfg.seed = 77;
    cfg.noiseless = true;
    const CampaignResult res = run_campaign(cfg, 4, 1);
    for (const TrialResult& t : res.trials) REQUIRE(t.hybrid.success);
}

TEST_CASE("table sweep pins every cell to the same seed schedule") {
    ScenarioConfig base;
    base.seed = 5;
    base.sigma_phase = 0.003;
    const TableGrid grid = sweep_tables(base, {5, 6}, {0, 1}, 8, 1);
    REQUIRE(grid.success.rows() == 2);
    REQUIRE(grid.success.cols() == 2);
    REQUIRE(grid.error_deg.rows() == 2);

    // cell (5, L=1) must equal a plain hybrid campaign with the same base
    ScenarioConfig cell = base;
    cell.n_satellites = 5;
    cell.n_bs = 1;
    MethodSelection hybrid_only;
    hybrid_only.gnss_only = false;
    hybrid_only.fiveg_only = false;
    const CampaignResult ref = run_campaign(cell, 8, 1, hybrid_only);
    REQUIRE(grid.success(0, 1) == ref.metrics.hybrid.success_rate);
    REQUIRE(grid.error_deg(0, 1) == ref.metrics.hybrid.fixed_r_deg_mean);
}

TEST_CASE("figure sweeps emit the documented long format") {
    ScenarioConfig base;
    base.seed = 3;
    const auto rows = figure_data(2, base, 4, 1);
    REQUIRE_FALSE(rows.empty());
    bool has_setup = false;
    for (const auto& r : rows) {
        REQUIRE_FALSE(r.setup.empty());
        REQUIRE_FALSE(r.method.empty());
        REQUIRE_FALSE(r.metric.empty());
        if (r.setup == "T64_P17") has_setup = true;
    }
    REQUIRE(has_setup);
    REQUIRE_THROWS_AS(figure_data(9, base, 4, 1), Error);
}

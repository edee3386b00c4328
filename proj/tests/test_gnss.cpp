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
#include <vector>

#include "attfuse/gnss.hpp"
#include "attfuse/linalg.hpp"

using namespace attfuse;

namespace {

// Oracle for a line of sight from azimuth/elevation, written against the
// local east-north-up convention directly.
Vec3 los_oracle(double az_deg, double el_deg) {
    const double az = deg2rad(az_deg), el = deg2rad(el_deg);
    return Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
}

Constellation fixed_constellation() {
    return constellation_from_angles(
        {{10.0, 30.0}, {80.0, 70.0}, {200.0, 45.0}, {255.0, 25.0}, {320.0, 55.0}});
}

} // namespace

TEST_CASE("line of sight vectors and pivot selection") {
    const Constellation c = fixed_constellation();
    REQUIRE(c.n_sats() == 5);
    for (int j = 0; j < 5; ++j) REQUIRE(std::abs(c.los.col(j).norm() - 1.0) < 1e-14);
    REQUIRE((c.los.col(0) - los_oracle(10.0, 30.0)).norm() < 1e-14);
    REQUIRE((c.los.col(3) - los_oracle(255.0, 25.0)).norm() < 1e-14);
    REQUIRE(c.pivot == 1); // 70 degrees is the highest elevation
}

TEST_CASE("differencing geometry rows are pivot minus satellite") {
    const Constellation c = fixed_constellation();
    const GnssDesign d = build_design(c, BaselineSet(), GnssNoiseModel{});
    REQUIRE(d.G0.rows() == 4);
    int row = 0;
    for (int j = 0; j < 5; ++j) {
        if (j == c.pivot) continue;
        const Vec3 expect = c.los.col(c.pivot) - c.los.col(j);
        REQUIRE((d.G0.row(row).transpose() - expect).norm() < 1e-14);
        ++row;
    }
    // phase rows carry the geometry twice, code rows on top
    REQUIRE((d.G.topRows(4) - d.G0).norm() == 0.0);
    REQUIRE((d.G.bottomRows(4) - d.G0).norm() == 0.0);
    // ambiguities enter phase rows only, scaled by the wavelength
    REQUIRE(d.A.topRows(4).norm() == 0.0);
    REQUIRE((d.A.bottomRows(4) - d.wavelength * MatX::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("double difference covariance structure") {
    const Constellation c = fixed_constellation();
    const GnssNoiseModel noise = GnssNoiseModel::from_sigma_phase(0.002);
    REQUIRE(noise.sigma_code == Catch::Approx(0.2));
    const GnssDesign d = build_design(c, BaselineSet(), noise);

    // P_M = (I + 1 1^T) / 2 for baselines sharing one reference antenna
    const MatX ones = MatX::Ones(3, 3);
    REQUIRE((d.P_M - 0.5 * (MatX::Identity(3, 3) + ones)).cwiseAbs().maxCoeff() < 1e-14);

    // single-baseline block: code first, then phase, each 2 sigma^2 (I + 1 1^T)
    const int n = 4;
    const MatX c_n = 2.0 * (MatX::Identity(n, n) + MatX::Ones(n, n));
    REQUIRE((d.sigma_eps.topLeftCorner(n, n) - noise.sigma_code * noise.sigma_code * c_n)
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    REQUIRE((d.sigma_eps.bottomRightCorner(n, n) - noise.sigma_phase * noise.sigma_phase * c_n)
                .cwiseAbs()
                .maxCoeff() < 1e-16);
    REQUIRE(d.sigma_eps.topRightCorner(n, n).norm() == 0.0);

    // eigenvalues of 2 (I + 1 1^T): one at 2 (N + 1), the rest at 2
    Eigen::SelfAdjointEigenSolver<MatX> eig(c_n);
    REQUIRE(eig.eigenvalues()(n - 1) == Catch::Approx(2.0 * (n + 1)));
    for (int i = 0; i < n - 1; ++i) REQUIRE(eig.eigenvalues()(i) == Catch::Approx(2.0));

    // full covariance is the Kronecker product
    REQUIRE((d.Q_Y - kron(d.P_M, d.sigma_eps)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthetic constellations respect elevation mask and separation") {
    Rng rng(31);
    for (int c = 0; c < 25; ++c) {
        const Constellation cons = synth_constellation(6, rng);
        REQUIRE(cons.n_sats() == 6);
        for (int j = 0; j < 6; ++j) {
            REQUIRE(cons.elevation[j] >= deg2rad(15.0) - 1e-12);
            REQUIRE(cons.elevation[j] <= deg2rad(75.0) + 1e-12);
            for (int k = j + 1; k < 6; ++k) {
                const double sep = std::acos(
                    std::clamp(cons.los.col(j).dot(cons.los.col(k)), -1.0, 1.0));
                REQUIRE(sep >= deg2rad(10.0) - 1e-9);
            }
        }
        REQUIRE(cons.elevation[cons.pivot] == cons.elevation.maxCoeff());
    }
}

TEST_CASE("simulated noise matches the observation covariance") {
    // Monte-Carlo check of vec(Y) covariance against P_M (x) Sigma_eps.
    const Constellation c = fixed_constellation();
    const GnssNoiseModel noise = GnssNoiseModel::from_sigma_phase(0.01);
    const BaselineSet baselines;
    const GnssDesign d = build_design(c, baselines, noise);

    Rng arng(5);
    const Rotation r_true = random_rotation(arng);
    const MatXi z_true = MatXi::Zero(4, 3);

    const int dim = 2 * 4 * 3;
    const int n_draws = 20000;
    MatX sum = MatX::Zero(dim, dim);
    VecX mean_ref(dim);
    {
        Rng rng(77);
        const GnssEpoch clean = simulate_epoch(d, baselines, r_true, z_true, rng, true);
        mean_ref = Eigen::Map<const VecX>(clean.Y.data(), dim);
    }
    Rng rng(78);
    for (int i = 0; i < n_draws; ++i) {
        const GnssEpoch e = simulate_epoch(d, baselines, r_true, z_true, rng, false);
        const VecX v = Eigen::Map<const VecX>(e.Y.data(), dim) - mean_ref;
        sum += v * v.transpose();
    }
    const MatX sample = sum / n_draws;
    REQUIRE((sample - d.Q_Y).norm() < 0.1 * d.Q_Y.norm());
}

TEST_CASE("noiseless epochs satisfy the model exactly") {
    const Constellation c = fixed_constellation();
    const BaselineSet baselines;
    const GnssDesign d = build_design(c, baselines, GnssNoiseModel{});
    Rng rng(9);
    const Rotation r_true = random_rotation(rng);
    const MatXi z_true = sample_ambiguities(4, 3, 100, rng);
    const GnssEpoch e = simulate_epoch(d, baselines, r_true, z_true, rng, true);
    const MatX expect =
        d.A * z_true.cast<double>() + d.G * r_true.matrix() * baselines.F;
    REQUIRE((e.Y - expect).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(e.Z_true == z_true);
}

TEST_CASE("ambiguity draws cover the configured range deterministically") {
    Rng a(55), b(55);
    const MatXi za = sample_ambiguities(6, 3, 100, a);
    const MatXi zb = sample_ambiguities(6, 3, 100, b);
    REQUIRE(za == zb);
    REQUIRE(za.minCoeff() >= -100);
    REQUIRE(za.maxCoeff() <= 100);
    Rng wide(56);
    const MatXi zw = sample_ambiguities(200, 50, 3, wide);
    REQUIRE(zw.minCoeff() == -3);
    REQUIRE(zw.maxCoeff() == 3);
}

TEST_CASE("debug sign-flip hook negates the differencing geometry") {
    const Constellation c = fixed_constellation();
    const GnssDesign clean = build_design(c, BaselineSet(), GnssNoiseModel{});
    detail::g0_sign_flip = true;
    const GnssDesign flipped = build_design(c, BaselineSet(), GnssNoiseModel{});
    detail::g0_sign_flip = false;
    REQUIRE((flipped.G0 + clean.G0).norm() == 0.0);
    REQUIRE((flipped.Q_Y - clean.Q_Y).norm() == 0.0);
}

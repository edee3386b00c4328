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
// Double-differenced GNSS observation model for a multi-antenna platform.
// Per baseline m the stacked code+phase observation obeys
//
//   y_m = A z_m + G b_m + eps,   b_m = R f_m,
//
// with A = [0; lambda I] (N x N ambiguities enter the phase rows only) and
// G = [G0; G0], where row j of G0 is (u_pivot - u_j)^T. Double differencing
// against a common pivot satellite and a common master antenna produces the
// correlation structure C_N = 2 (I + 1 1^T) per observation type and the
// cross-baseline factor P_M (unit diagonal, 1/2 off-diagonal).

#pragma once

#include <cstdlib>
#include <utility>
#include <vector>

#include "frames.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace attfuse {

namespace detail {
// Fault-injection hook used by the self-check tool to demonstrate that the
// frozen oracle fixtures catch model regressions. Never set in normal use.
inline bool g0_sign_flip = false;
} // namespace detail

struct Constellation {
    MatX los;       // 3 x (N+1), unit line-of-sight vectors, local frame
    VecX elevation; // radians
    VecX azimuth;   // radians
    int pivot = 0;  // highest elevation, ties broken by lowest index

    int n_sats() const { return static_cast<int>(los.cols()); }
};

inline Vec3 los_from_az_el(double az_rad, double el_rad) {
    return Vec3(std::cos(el_rad) * std::sin(az_rad), std::cos(el_rad) * std::cos(az_rad),
                std::sin(el_rad));
}

// Build a constellation from explicit (azimuth, elevation) pairs in degrees.
inline Constellation constellation_from_angles(const std::vector<std::pair<double, double>>& az_el_deg) {
    const int n = static_cast<int>(az_el_deg.size());
    if (n < 2) throw Error(ErrorCode::configuration, "constellation needs at least 2 satellites");
    Constellation c;
    c.los.resize(3, n);
    c.elevation.resize(n);
    c.azimuth.resize(n);
    for (int i = 0; i < n; ++i) {
        const double az = deg2rad(az_el_deg[i].first);
        const double el = deg2rad(az_el_deg[i].second);
        if (az_el_deg[i].second <= 0.0 || az_el_deg[i].second > 90.0)
            throw Error(ErrorCode::configuration, "satellite elevation must lie in (0, 90] degrees");
        c.los.col(i) = los_from_az_el(az, el);
        c.elevation[i] = el;
        c.azimuth[i] = az;
    }
    c.pivot = 0;
    for (int i = 1; i < n; ++i)
        if (c.elevation[i] > c.elevation[c.pivot]) c.pivot = i;
    return c;
}

// Draw a synthetic constellation: azimuth uniform on [0, 360), elevation
// uniform on [15, 75] degrees, any satellite closer than 10 degrees to an
// already accepted one is redrawn (at most 1000 redraws in total).
inline Constellation synth_constellation(int count, Rng& rng) {
    if (count < 2) throw Error(ErrorCode::configuration, "constellation needs at least 2 satellites");
    const double min_sep = deg2rad(10.0);
    std::vector<std::pair<double, double>> angles;
    angles.reserve(count);
    int attempts = 0;
    while (static_cast<int>(angles.size()) < count) {
        if (++attempts > 1000)
            throw Error(ErrorCode::geometry, "unable to place satellites with 10 degree separation");
        const double az = rng.uniform(0.0, 360.0);
        const double el = rng.uniform(15.0, 75.0);
        const Vec3 u = los_from_az_el(deg2rad(az), deg2rad(el));
        bool ok = true;
        for (const auto& [paz, pel] : angles) {
            const Vec3 p = los_from_az_el(deg2rad(paz), deg2rad(pel));
            if (std::acos(std::clamp(u.dot(p), -1.0, 1.0)) < min_sep) {
                ok = false;
                break;
            }
        }
        if (ok) angles.emplace_back(az, el);
    }
    return constellation_from_angles(angles);
}

// Body-frame baseline coordinates, one column per baseline.
struct BaselineSet {
    MatX F; // 3 x M

    BaselineSet() : F(Mat3::Identity()) {}

    explicit BaselineSet(const MatX& f) : F(f) {
        if (F.rows() != 3 || F.cols() < 1)
            throw Error(ErrorCode::configuration, "baseline matrix must be 3 x M with M >= 1");
        for (Eigen::Index m = 0; m < F.cols(); ++m)
            if (F.col(m).norm() < 1e-12)
                throw Error(ErrorCode::configuration, "baseline columns must be nonzero");
        Eigen::JacobiSVD<MatX> svd(F);
        const auto& sv = svd.singularValues();
        const int rank_needed = std::min<int>(3, static_cast<int>(F.cols()));
        if (sv(rank_needed - 1) < 1e-10 * sv(0))
            throw Error(ErrorCode::configuration, "baseline columns are linearly dependent");
    }

    int n_baselines() const { return static_cast<int>(F.cols()); }
};

enum class DdCorrelation { full, diagonal };

struct GnssNoiseModel {
    double sigma_phase = 0.001;            // m, undifferenced carrier phase
    double sigma_code = 0.1;               // m, defaults to 100 x sigma_phase
    double wavelength = gps_l1_wavelength; // m
    DdCorrelation dd_correlation = DdCorrelation::full;

    static GnssNoiseModel from_sigma_phase(double sp) {
        GnssNoiseModel n;
        n.sigma_phase = sp;
        n.sigma_code = 100.0 * sp;
        return n;
    }

    void validate() const {
        if (sigma_phase < 0.0 || sigma_code < 0.0)
            throw Error(ErrorCode::configuration, "noise sigmas must be non-negative");
        if (wavelength <= 0.0) throw Error(ErrorCode::configuration, "wavelength must be positive");
    }
};

struct GnssDesign {
    MatX A;         // 2N x N
    MatX G0;        // N x 3
    MatX G;         // 2N x 3
    MatX sigma_eps; // 2N x 2N, per-baseline observation covariance
    MatX P_M;       // M x M cross-baseline correlation
    MatX Q_Y;       // 2NM x 2NM = P_M (x) sigma_eps
    int n_dd = 0;
    int n_baselines = 0;
    double wavelength = gps_l1_wavelength;
};

inline GnssDesign build_design(const Constellation& c, const BaselineSet& baselines,
                               const GnssNoiseModel& noise) {
    noise.validate();
    const int n = c.n_sats() - 1; // double differences
    const int m = baselines.n_baselines();
    if (n < 1) throw Error(ErrorCode::configuration, "need at least 2 satellites");

    GnssDesign d;
    d.n_dd = n;
    d.n_baselines = m;
    d.wavelength = noise.wavelength;

    d.A = MatX::Zero(2 * n, n);
    d.A.bottomRows(n) = noise.wavelength * MatX::Identity(n, n);

    d.G0.resize(n, 3);
    int row = 0;
    for (int j = 0; j < c.n_sats(); ++j) {
        if (j == c.pivot) continue;
        d.G0.row(row++) = (c.los.col(c.pivot) - c.los.col(j)).transpose();
    }
    if (detail::g0_sign_flip) d.G0 = -d.G0;
    d.G.resize(2 * n, 3);
    d.G << d.G0, d.G0;

    MatX c_n;
    if (noise.dd_correlation == DdCorrelation::full)
        c_n = 2.0 * (MatX::Identity(n, n) + MatX::Ones(n, n));
    else
        c_n = 2.0 * MatX::Identity(n, n);
    d.sigma_eps = MatX::Zero(2 * n, 2 * n);
    d.sigma_eps.topLeftCorner(n, n) = noise.sigma_code * noise.sigma_code * c_n;
    d.sigma_eps.bottomRightCorner(n, n) = noise.sigma_phase * noise.sigma_phase * c_n;

    d.P_M = MatX::Constant(m, m, 0.5);
    d.P_M.diagonal().setOnes();

    d.Q_Y = kron(d.P_M, d.sigma_eps);
    return d;
}

struct GnssEpoch {
    MatX Y;       // 2N x M
    MatXi Z_true; // N x M
    Rotation R_true;
    MatX F; // 3 x M
};

// Integer ambiguities uniform on [-half_range, half_range], column-major
// draw order.
inline MatXi sample_ambiguities(int n_dd, int n_baselines, int half_range, Rng& rng) {
    if (half_range < 0) throw Error(ErrorCode::configuration, "ambiguity half range must be >= 0");
    MatXi z(n_dd, n_baselines);
    for (int m = 0; m < n_baselines; ++m)
        for (int j = 0; j < n_dd; ++j) z(j, m) = rng.uniform_int(-half_range, half_range);
    return z;
}

// Simulate one epoch of double-differenced observations. The noise draw uses
// the full Q_Y factorization so cross-baseline correlation is honoured; with
// noiseless = true (or zero sigmas) the exact model value is returned.
inline GnssEpoch simulate_epoch(const GnssDesign& d, const BaselineSet& baselines,
                                const Rotation& r_true, const MatXi& z_true, Rng& rng,
                                bool noiseless = false) {
    const int n = d.n_dd;
    const int m = d.n_baselines;
    if (z_true.rows() != n || z_true.cols() != m)
        throw Error(ErrorCode::configuration, "ambiguity matrix has wrong shape");
    if (baselines.n_baselines() != m)
        throw Error(ErrorCode::configuration, "baseline count does not match design");

    GnssEpoch e;
    e.Z_true = z_true;
    e.R_true = r_true;
    e.F = baselines.F;
    e.Y.resize(2 * n, m);
    const MatX b = r_true.matrix() * baselines.F; // local-frame baselines
    for (int k = 0; k < m; ++k) e.Y.col(k) = d.A * z_true.col(k).cast<double>() + d.G * b.col(k);

    const bool zero_sigma = d.sigma_eps.isZero(0.0);
    if (!noiseless && !zero_sigma) {
        Eigen::LLT<MatX> llt(d.Q_Y);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::covariance_not_spd, "Q_Y is not positive definite");
        const VecX noise = llt.matrixL() * rng.normal_vector(2 * n * m);
        e.Y += Eigen::Map<const MatX>(noise.data(), 2 * n, m);
    }
    return e;
}

} // namespace attfuse

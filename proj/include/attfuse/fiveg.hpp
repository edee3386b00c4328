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
// 5G downlink angle-of-arrival model. Each base station contributes one
// body-frame unit direction t = R^T e with a CRLB-level dispersion obtained
// from the Fisher information of the narrowband far-field channel
//
//   h_i = alpha * exp(-j 2 pi f / c * p_i^T t),
//
// where p_i are the receive-array element positions in the body frame. The
// information matrix is evaluated over (theta, phi, Re alpha, Im alpha) and
// the complex gain is removed by Schur complement.

#pragma once

#include <cmath>
#include <vector>

#include "frames.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace attfuse {

struct RadioConfig {
    double carrier_hz = 28e9;
    double bandwidth_hz = 300e6;
    double tx_power_dbm = 17.0;
    int n_transmissions = 128;
    double noise_psd_dbm_hz = -174.0;
    int array_rows = 5;
    int array_cols = 5;

    double wavelength() const { return speed_of_light / carrier_hz; }
    double tx_power_watts() const { return std::pow(10.0, (tx_power_dbm - 30.0) / 10.0); }

    void validate() const {
        if (carrier_hz <= 0.0 || bandwidth_hz <= 0.0)
            throw Error(ErrorCode::configuration, "carrier and bandwidth must be positive");
        if (n_transmissions < 1)
            throw Error(ErrorCode::configuration, "n_transmissions must be >= 1");
        if (array_rows < 1 || array_cols < 1)
            throw Error(ErrorCode::configuration, "array dimensions must be >= 1");
    }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Thermal noise power over the signal bandwidth.
inline double noise_power(double psd_dbm_hz, double bandwidth_hz) {
    return dbm_to_watts(psd_dbm_hz) * bandwidth_hz;
}

// Centered rectangular array in the body u1-u2 plane, one column per element.
struct ArrayGeometry {
    MatX elements; // 3 x J

    int n_elements() const { return static_cast<int>(elements.cols()); }
};

inline ArrayGeometry upa_geometry(int rows, int cols, double spacing) {
    if (rows < 1 || cols < 1 || spacing <= 0.0)
        throw Error(ErrorCode::configuration, "invalid array geometry");
    ArrayGeometry g;
    g.elements.resize(3, static_cast<Eigen::Index>(rows) * cols);
    int k = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            g.elements(0, k) = (r - 0.5 * (rows - 1)) * spacing;
            g.elements(1, k) = (c - 0.5 * (cols - 1)) * spacing;
            g.elements(2, k) = 0.0;
            ++k;
        }
    return g;
}

inline ArrayGeometry upa_geometry(const RadioConfig& cfg) {
    return upa_geometry(cfg.array_rows, cfg.array_cols, 0.5 * cfg.wavelength());
}

struct BsLayout {
    MatX positions; // 3 x L, local frame, metres
    Vec3 user = Vec3::Zero();

    int n_bs() const { return static_cast<int>(positions.cols()); }
};

// Fixed survey of up to eight base stations around the user.
inline BsLayout bs_layout(int count, const Vec3& user = Vec3::Zero()) {
    if (count < 1 || count > 8)
        throw Error(ErrorCode::configuration, "preset layout provides 1..8 base stations");
    static const double bx[8] = {10, -10, 5, -5, 15, -15, 0, 0};
    static const double by[8] = {10, -10, 10, -10, 0, 0, 15, -15};
    static const double bz[8] = {10, 10, 15, 15, 10, 10, 10, 10};
    BsLayout l;
    l.user = user;
    l.positions.resize(3, count);
    for (int i = 0; i < count; ++i) l.positions.col(i) = user + Vec3(bx[i], by[i], bz[i]);
    return l;
}

inline BsLayout bs_layout(const MatX& positions, const Vec3& user = Vec3::Zero()) {
    if (positions.rows() != 3 || positions.cols() < 1)
        throw Error(ErrorCode::configuration, "base station positions must be 3 x L");
    BsLayout l;
    l.positions = positions;
    l.user = user;
    for (int i = 0; i < l.n_bs(); ++i)
        if ((l.positions.col(i) - user).norm() < 1e-9)
            throw Error(ErrorCode::geometry, "base station coincides with user position");
    return l;
}

// Unit vectors from the user towards each base station, local frame.
inline MatX los_unit_vectors(const BsLayout& l) {
    MatX e(3, l.n_bs());
    for (int i = 0; i < l.n_bs(); ++i) {
        const Vec3 d = l.positions.col(i) - l.user;
        e.col(i) = d / d.norm();
    }
    return e;
}

// Free-space complex gain with uniform random phase.
inline cplx channel_gain(double distance_m, double carrier_hz, Rng& rng) {
    if (distance_m <= 0.0) throw Error(ErrorCode::geometry, "distance must be positive");
    const double mag = (speed_of_light / carrier_hz) / (4.0 * pi * distance_m);
    const double ph = rng.uniform(0.0, 2.0 * pi);
    return std::polar(mag, ph);
}

// Narrowband steering vector exp(-j k p^T t) for a unit direction t (body
// frame); t need not be normalized here, callers guarantee it.
inline VecXc steering_response(const ArrayGeometry& g, double carrier_hz, const Vec3& t) {
    const double k = 2.0 * pi * carrier_hz / speed_of_light;
    VecXc e(g.n_elements());
    for (int i = 0; i < g.n_elements(); ++i)
        e[i] = std::polar(1.0, -k * g.elements.col(i).dot(t));
    return e;
}

namespace detail {

struct DirectionAngles {
    double theta; // azimuth in the body u1-u2 plane
    double phi;   // elevation from the body u1-u2 plane
};

inline DirectionAngles angles_from_direction(const Vec3& t) {
    const double z = std::clamp(t.z(), -1.0, 1.0);
    const double phi = std::asin(z);
    if (std::abs(std::cos(phi)) < 1e-6)
        throw Error(ErrorCode::pole_singularity,
                    "direction too close to the parameterization pole (|cos phi| < 1e-6)");
    return {std::atan2(t.y(), t.x()), phi};
}

inline Vec3 direction_from_angles(double theta, double phi) {
    return Vec3(std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta), std::sin(phi));
}

// Columns d t / d theta, d t / d phi.
inline Eigen::Matrix<double, 3, 2> direction_jacobian(double theta, double phi) {
    Eigen::Matrix<double, 3, 2> j;
    j.col(0) << -std::cos(phi) * std::sin(theta), std::cos(phi) * std::cos(theta), 0.0;
    j.col(1) << -std::sin(phi) * std::cos(theta), -std::sin(phi) * std::sin(theta), std::cos(phi);
    return j;
}

} // namespace detail

// Equivalent 2x2 Fisher information over (theta, phi) for one base station,
// gain nuisance removed by Schur complement. t_body must be unit length.
inline Mat2 aoa_fim(const ArrayGeometry& g, const RadioConfig& cfg, const Vec3& t_body, cplx gain) {
    cfg.validate();
    if (std::abs(gain) == 0.0) throw Error(ErrorCode::singular_fim, "zero channel gain");
    const auto ang = detail::angles_from_direction(t_body);
    const Vec3 t = detail::direction_from_angles(ang.theta, ang.phi);
    const auto jac = detail::direction_jacobian(ang.theta, ang.phi);

    const double k = 2.0 * pi * cfg.carrier_hz / speed_of_light;
    const VecXc e = steering_response(g, cfg.carrier_hz, t);
    const int n = g.n_elements();
    MatXc d(n, 4); // derivatives wrt theta, phi, Re alpha, Im alpha
    for (int i = 0; i < n; ++i) {
        const cplx phase_deriv = cplx(0.0, -k) * e[i];
        d(i, 0) = gain * phase_deriv * g.elements.col(i).dot(jac.col(0));
        d(i, 1) = gain * phase_deriv * g.elements.col(i).dot(jac.col(1));
        d(i, 2) = e[i];
        d(i, 3) = cplx(0.0, 1.0) * e[i];
    }
    const double scale =
        2.0 * cfg.n_transmissions * cfg.tx_power_watts() / noise_power(cfg.noise_psd_dbm_hz, cfg.bandwidth_hz);
    const Eigen::Matrix4d full = scale * (d.adjoint() * d).real();

    const Mat2 a = full.topLeftCorner<2, 2>();
    const Mat2 b = full.topRightCorner<2, 2>();
    const Mat2 c = full.bottomRightCorner<2, 2>();
    if (std::abs(c.determinant()) < 1e-300)
        throw Error(ErrorCode::singular_fim, "gain block of the information matrix is singular");
    const Mat2 efim = a - b * c.inverse() * b.transpose();
    if (efim.determinant() <= 0.0 || efim(0, 0) <= 0.0)
        throw Error(ErrorCode::singular_fim, "equivalent information matrix is singular");
    return 0.5 * (efim + efim.transpose());
}

// Rank-2 dispersion of the unit direction induced by the angle-domain CRLB.
inline Mat3 aoa_covariance(const Mat2& efim, const Vec3& t_body) {
    const auto ang = detail::angles_from_direction(t_body);
    const auto jac = detail::direction_jacobian(ang.theta, ang.phi);
    Eigen::LLT<Mat2> llt(efim);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::singular_fim, "equivalent information matrix is not positive definite");
    const Mat2 inv = llt.solve(Mat2::Identity());
    const Mat3 q = jac * inv * jac.transpose();
    return 0.5 * (q + q.transpose());
}

// Observed directions and their dispersion for all base stations.
struct AoaSet {
    MatX D;          // 3 x L, unit columns, body frame
    MatX E;          // 3 x L, unit columns, local frame
    MatX Q_D;        // 3L x 3L, block diagonal, rank-2 blocks
    MatX Q_D_weight; // 3L x 3L, block diagonal Moore-Penrose inverses of the blocks

    int n_bs() const { return static_cast<int>(D.cols()); }
};

// Simulate one AoA epoch: per base station the true body-frame direction is
// perturbed in the (theta, phi) tangent domain with covariance efim^-1, so
// columns of D stay exactly unit length. Draw order per station: gain phase,
// then the two correlated angle increments.
inline AoaSet simulate_aoa(const BsLayout& layout, const RadioConfig& cfg, const Rotation& r_true,
                           Rng& rng, bool noiseless = false) {
    cfg.validate();
    const int l = layout.n_bs();
    const ArrayGeometry array = upa_geometry(cfg);
    AoaSet s;
    s.E = los_unit_vectors(layout);
    s.D.resize(3, l);
    s.Q_D = MatX::Zero(3 * l, 3 * l);
    s.Q_D_weight = MatX::Zero(3 * l, 3 * l);

    for (int i = 0; i < l; ++i) {
        const double dist = (layout.positions.col(i) - layout.user).norm();
        const cplx gain = channel_gain(dist, cfg.carrier_hz, rng);
        const Vec3 t_true = r_true.matrix().transpose() * s.E.col(i);
        const Mat2 efim = aoa_fim(array, cfg, t_true, gain);
        const Mat3 q_t = aoa_covariance(efim, t_true);
        s.Q_D.block<3, 3>(3 * i, 3 * i) = q_t;
        s.Q_D_weight.block<3, 3>(3 * i, 3 * i) = sym_pinv(q_t);

        const auto ang = detail::angles_from_direction(t_true);
        double theta = ang.theta, phi = ang.phi;
        if (!noiseless) {
            const Mat2 q_ang = efim.inverse();
            Eigen::LLT<Mat2> llt(0.5 * (q_ang + q_ang.transpose()));
            if (llt.info() != Eigen::Success)
                throw Error(ErrorCode::covariance_not_spd, "angle covariance is not positive definite");
            const Vec2 w(rng.normal(), rng.normal());
            const Vec2 delta = llt.matrixL() * w;
            theta += delta[0];
            phi += delta[1];
        }
        s.D.col(i) = detail::direction_from_angles(theta, phi);
    }
    return s;
}

} // namespace attfuse

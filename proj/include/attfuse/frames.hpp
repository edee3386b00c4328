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
// Attitude representations and the local/body frame conventions shared by
// every other module. The attitude matrix R maps body coordinates into the
// local level frame: v_local = R * v_body.

#pragma once

#include <algorithm>
#include <cmath>

#include "rng.hpp"
#include "types.hpp"

namespace attfuse {

// yaw/pitch/roll in radians, applied as R = Rz(yaw) * Ry(pitch) * Rx(roll)
struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

namespace detail {
inline constexpr double rotation_tol = 1e-10;
}

// Proper rotation matrix. The checked constructor enforces orthonormality
// and det = +1 so downstream code can rely on SO(3) membership.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    explicit Rotation(const Mat3& m) : m_(m) {
        const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
        const double det = m.determinant();
        if (ortho > detail::rotation_tol || std::abs(det - 1.0) > detail::rotation_tol)
            throw Error(ErrorCode::degenerate_input,
                        "matrix is not a rotation (orthonormality defect " + std::to_string(ortho) +
                            ", det " + std::to_string(det) + ")");
    }

    const Mat3& matrix() const { return m_; }
    Rotation transposed() const { return Rotation(Mat3(m_.transpose())); }

    bool operator==(const Rotation& o) const { return m_ == o.m_; }

private:
    Mat3 m_;
};

inline Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return s;
}

// Rodrigues formula, exact for any rotation vector.
inline Rotation exp_so3(const Vec3& w) {
    const double th = w.norm();
    if (th < 1e-12) {
        const Mat3 s = skew(w);
        return Rotation(Mat3(Mat3::Identity() + s + 0.5 * s * s));
    }
    const Vec3 a = w / th;
    const Mat3 s = skew(a);
    return Rotation(Mat3(Mat3::Identity() + std::sin(th) * s + (1.0 - std::cos(th)) * s * s));
}

inline Rotation rotation_from_euler(const EulerAngles& e) {
    const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
    const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
    const double cr = std::cos(e.roll), sr = std::sin(e.roll);
    Mat3 rz, ry, rx;
    rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
    ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
    rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
    return Rotation(Mat3(rz * ry * rx));
}

inline Vec3 body_to_local(const Rotation& r, const Vec3& v_body) { return r.matrix() * v_body; }

// Geodesic distance on SO(3) in degrees. Uses the chord identity
// |A - B|_F = 2 sqrt(2) sin(theta/2), which keeps full precision for small
// angles where the trace/acos form loses half the mantissa.
inline double geodesic_angle_deg(const Rotation& a, const Rotation& b) {
    const double chord = (a.matrix() - b.matrix()).norm();
    const double s = std::clamp(chord / (2.0 * std::sqrt(2.0)), 0.0, 1.0);
    return rad2deg(2.0 * std::asin(s));
}

inline double frobenius_error(const Mat3& a, const Mat3& b) { return (a - b).norm(); }

// Nearest rotation in Frobenius norm (SVD with determinant correction).
// Rank <= 1 inputs have no unique minimizer and are rejected.
inline Rotation project_to_so3(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300) || sv(0) == 0.0)
        throw Error(ErrorCode::degenerate_input,
                    "projection to SO(3) undefined for rank-deficient input");
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    const double s = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    Mat3 d = Mat3::Identity();
    d(2, 2) = s;
    return Rotation(Mat3(u * d * v.transpose()));
}

// Uniform random rotation via normalized quaternion.
inline Rotation random_rotation(Rng& rng) {
    Eigen::Vector4d q;
    do {
        for (int i = 0; i < 4; ++i) q[i] = rng.normal();
    } while (q.norm() < 1e-12);
    q.normalize();
    const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    return Rotation(quat.toRotationMatrix());
}

} // namespace attfuse

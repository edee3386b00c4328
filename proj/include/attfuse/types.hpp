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

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace attfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecXi = Eigen::VectorXi;
using MatXi = Eigen::MatrixXi;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline constexpr double speed_of_light = 2.99792458e8; // m/s
inline constexpr double gps_l1_wavelength = 0.19029;   // m
inline constexpr double pi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / pi; }

enum class ErrorCode {
    configuration,
    geometry,
    covariance_not_spd,
    rank_deficient,
    pole_singularity,
    singular_fim,
    observability,
    non_convergence,
    degenerate_input,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::covariance_not_spd: return "covariance_not_spd";
    case ErrorCode::rank_deficient: return "rank_deficient";
    case ErrorCode::pole_singularity: return "pole_singularity";
    case ErrorCode::singular_fim: return "singular_fim";
    case ErrorCode::observability: return "observability";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::degenerate_input: return "degenerate_input";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + msg), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Thrown when an iterative refinement fails on every restart; carries the
// best iterate seen so callers can still inspect it.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, const Mat3& best, double cost)
        : Error(ErrorCode::non_convergence, msg), best_iterate(best), best_cost(cost) {}

    Mat3 best_iterate;
    double best_cost;
};

} // namespace attfuse

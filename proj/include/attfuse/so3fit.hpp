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
// Anisotropically weighted orthogonal fit: minimize
//   C(R) = vec(R - T)^T W vec(R - T)  over R in SO(3)
// by Gauss-Newton on the manifold (right-multiplied exponential updates)
// with a backtracking line search. The cost can be multimodal, so the solver
// is restarted from the orthogonal projection of T, from its three 180
// degree body-axis flips, and optionally from a caller-supplied guess; the
// lowest cost wins regardless of each attempt's convergence flag, since a
// stalled iterate is still a valid upper bound and may sit in a far better
// basin than a cheaply converged flip. With W proportional to the identity
// the projection start is already the global optimum (orthogonal Procrustes).
//
// This runs in the inner loop of the ambiguity search, so everything is
// fixed-size; no heap traffic per iteration.

#pragma once

#include <cmath>
#include <optional>

#include "frames.hpp"
#include "types.hpp"

namespace attfuse {

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

struct So3FitOptions {
    int max_restarts = 4;    // 1..4: projection start plus up to three flips
    int max_iterations = 100;
    double gradient_tol = 1e-10;       // relative to the initial gradient norm
    std::optional<Mat3> initial_guess; // extra restart, must be a rotation
};

struct So3FitResult {
    Rotation rotation;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double so3_fit_cost(const Mat3& r, const Mat3& target, const MatX& weight) {
    const Mat3 e = r - target;
    const Eigen::Map<const Vec9> v(e.data());
    return v.dot(weight * v);
}

namespace detail {

struct GnOutcome {
    Mat3 r;
    double cost;
    int iterations;
    bool converged;
};

// Levenberg-Marquardt on the manifold: damped normal equations with a
// multiplicative trust adjustment. Plain Gauss-Newton with backtracking
// crawls along the ill-conditioned valleys these weights produce.
inline GnOutcome so3_gauss_newton(Mat3 r, const Mat3& target, const Mat9& weight,
                                  const So3FitOptions& opt) {
    const auto eval = [&](const Mat3& rot) {
        const Mat3 e = rot - target;
        const Eigen::Map<const Vec9> v(e.data());
        return v.dot(weight * v);
    };
    double cost = eval(r);
    double g0_ref = 1.0;
    double mu = 0.0;
    int iter = 0;
    bool converged = false;
    Eigen::Matrix<double, 9, 3> jac;
    for (; iter < opt.max_iterations; ++iter) {
        for (int k = 0; k < 3; ++k) {
            const Mat3 dk = r * skew(Vec3::Unit(k));
            jac.col(k) = Eigen::Map<const Vec9>(dk.data());
        }
        const Mat3 e = r - target;
        const Vec9 wres = weight * Eigen::Map<const Vec9>(e.data());
        const Vec3 g = jac.transpose() * wres;
        if (iter == 0) g0_ref = std::max(1.0, g.norm());
        if (g.norm() <= opt.gradient_tol * g0_ref) {
            converged = true;
            break;
        }
        const Mat3 h = jac.transpose() * (weight * jac);
        const double curv = h.trace() / 3.0;
        if (iter == 0) mu = 1e-3 * curv;
        bool improved = false;
        double first_step = 0.0; // step size at the incoming damping level
        for (int attempt = 0; attempt < 40; ++attempt) {
            const Vec3 delta = -(h + mu * Mat3::Identity()).ldlt().solve(g);
            if (delta.allFinite()) {
                if (attempt == 0) first_step = delta.norm();
                const Mat3 trial = r * exp_so3(delta).matrix();
                const double trial_cost = eval(trial);
                if (trial_cost < cost) {
                    r = trial;
                    cost = trial_cost;
                    mu *= 0.25;
                    improved = true;
                    break;
                }
            }
            mu = std::max(mu * 4.0, 1e-12 * curv);
        }
        if (!improved) {
            // Cost improvements below eps * cost are not representable, which
            // with an ill-conditioned weight happens while the Newton step is
            // still ~sqrt(eps * cost / lambda_min). Accept the point when the
            // (lightly damped) step shows we are that close to stationarity.
            converged = first_step > 0.0 && first_step <= 1e-6;
            break;
        }
    }
    return {r, cost, iter, converged};
}

// Undamped Newton refinement from a near-stationary start. The loop above
// accepts steps on cost decrease, so it stalls once the remaining
// improvement drops below cost roundoff, even though the gradient is still
// accurate in absolute terms well past that point. Stepping on gradient
// decrease alone closes the last ~sqrt(eps) of the parameter gap.
inline GnOutcome so3_newton_polish(GnOutcome in, const Mat3& target, const Mat9& weight,
                                   const So3FitOptions& opt) {
    Eigen::Matrix<double, 9, 3> jac;
    const auto gradient = [&](const Mat3& rot, Vec3& g, Mat3& h) {
        for (int k = 0; k < 3; ++k) {
            const Mat3 dk = rot * skew(Vec3::Unit(k));
            jac.col(k) = Eigen::Map<const Vec9>(dk.data());
        }
        const Mat3 e = rot - target;
        const Vec9 wres = weight * Eigen::Map<const Vec9>(e.data());
        g = jac.transpose() * wres;
        // full Hessian, not the Gauss-Newton part alone: the residual is
        // not small at the optimum, so the curvature term it multiplies is
        // the same order as J^T W J and plain GN steps can overshoot
        h = jac.transpose() * (weight * jac);
        const Mat3 a = rot.transpose() * Eigen::Map<const Mat3>(wres.data());
        h += 0.5 * (a + a.transpose()) - a.trace() * Mat3::Identity();
    };
    Mat3 r = in.r;
    Vec3 g;
    Mat3 h;
    gradient(r, g, h);
    double gnorm = g.norm();
    const double g_ref = std::max(1.0, gnorm);
    for (int iter = 0; iter < 20 && gnorm > 0.0; ++iter) {
        const Vec3 delta = -h.ldlt().solve(g);
        // a long step means the start was not near-stationary; leave those
        // to the damped loop rather than risk hopping basins here
        if (!delta.allFinite() || delta.norm() > 1e-4) break;
        const Mat3 trial = r * exp_so3(delta).matrix();
        Vec3 gt;
        Mat3 ht;
        gradient(trial, gt, ht);
        if (gt.norm() >= gnorm) break;
        r = trial;
        g = gt;
        h = ht;
        gnorm = gt.norm();
    }
    const Mat3 e = r - target;
    const Eigen::Map<const Vec9> v(e.data());
    const double cost = v.dot(weight * v);
    // the true cost never rises along accepted steps; allow roundoff only
    if (cost <= in.cost + 1e-13 * (1.0 + std::abs(in.cost))) {
        in.r = r;
        in.cost = cost;
        if (gnorm <= opt.gradient_tol * g_ref) in.converged = true;
    }
    return in;
}

} // namespace detail

inline So3FitResult weighted_so3_fix(const Mat3& target, const MatX& weight,
                                     const So3FitOptions& opt = {}) {
    if (weight.rows() != 9 || weight.cols() != 9)
        throw Error(ErrorCode::configuration, "attitude weight must be 9x9");
    if (opt.max_restarts < 1 || opt.max_restarts > 4)
        throw Error(ErrorCode::configuration, "max_restarts must be in [1,4]");
    const Mat9 w = weight;

    const Mat3 base = project_to_so3(target).matrix();
    bool have_best = false;
    detail::GnOutcome best{Mat3::Identity(), 0.0, 0, false};
    bool any_converged = false;
    const auto consider = [&](const Mat3& start) {
        const auto out = detail::so3_gauss_newton(start, target, w, opt);
        any_converged = any_converged || out.converged;
        if (!have_best || out.cost < best.cost) {
            best = out;
            have_best = true;
        }
    };
    for (int s = 0; s < opt.max_restarts; ++s) {
        Mat3 start = base;
        if (s > 0) {
            Vec3 diag = -Vec3::Ones();
            diag[s - 1] = 1.0; // 180 degree flip about body axis s-1
            start = base * diag.asDiagonal();
        }
        consider(start);
    }
    if (opt.initial_guess) consider(Rotation(*opt.initial_guess).matrix());
    best = detail::so3_newton_polish(best, target, w, opt);
    if (!any_converged)
        throw NonConvergenceError("weighted orthogonal fit did not converge", best.r, best.cost);
    return {Rotation(best.r), best.cost, best.iterations, best.converged};
}

} // namespace attfuse

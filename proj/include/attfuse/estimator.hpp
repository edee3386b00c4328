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
// Joint attitude / integer-ambiguity estimation. The unknown vector is
// x = [vec(Z); vec(R)] with Z the N x M integer ambiguity matrix and R the
// body-to-local rotation. Two measurement groups contribute additively to
// the normal equations:
//
//   carrier/code:  vec(Y)  = (I_M kron A) vec(Z) + (F^T kron G) vec(R) + e
//   directions:    vec(D^T) = (I_3 kron E^T) vec(R) + w
//
// The float solution ignores both the integer and the orthonormality
// constraint. Integers are then recovered by enumerating lattice candidates
// in the decorrelated ambiguity metric and scoring each with the orthogonally
// constrained conditional attitude cost; enumeration depth grows until the
// incumbent's total cost is certified against the next lattice distance.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "fiveg.hpp"
#include "frames.hpp"
#include "gnss.hpp"
#include "lambda.hpp"
#include "linalg.hpp"
#include "so3fit.hpp"
#include "types.hpp"

namespace attfuse {

struct SearchControl {
    int initial_candidates = 2;
    double expansion = 2.0;
    int max_candidates = 10000;
    double so3_tol = 1e-10;
    int so3_max_iterations = 100;
};

// Direction-measurement weight in vec(D^T) ordering. Per-station weights are
// blocked by station in vec(D) ordering, so the stacked form needs the
// commutation permutation applied on both sides.
inline MatX fiveg_weight_stacked(const AoaSet& aoa) {
    const Eigen::Index l = aoa.E.cols();
    MatX w = MatX::Zero(3 * l, 3 * l);
    for (Eigen::Index s = 0; s < l; ++s) {
        const Mat3 wb = aoa.Q_D_weight.block<3, 3>(3 * s, 3 * s);
        for (int j = 0; j < 3; ++j)
            for (int j2 = 0; j2 < 3; ++j2) w(j * l + s, j2 * l + s) = wb(j, j2);
    }
    return w;
}

struct HybridModel {
    MatX normal_gnss; // (NM+9) x (NM+9)
    MatX normal_fiveg;
    VecX rhs_gnss;
    VecX rhs_fiveg;
    int n_dd = 0;       // N
    int n_baselines = 0; // M
    int n_bs = 0;        // L, 0 for carrier/code only
};

inline HybridModel assemble_hybrid(const GnssDesign& design, const MatX& y, const MatX& f,
                                   const AoaSet* aoa = nullptr) {
    const int n = design.n_dd;
    const int m = design.n_baselines;
    if (f.rows() != 3 || static_cast<int>(f.cols()) != m)
        throw Error(ErrorCode::configuration, "baseline matrix does not match the design");
    if (y.rows() != 2 * n || static_cast<int>(y.cols()) != m)
        throw Error(ErrorCode::configuration, "observation matrix has the wrong shape");
    const int nz = n * m;
    const int nx = nz + 9;

    HybridModel model;
    model.n_dd = n;
    model.n_baselines = m;

    MatX h_gnss(2 * n * m, nx);
    h_gnss << kron(MatX::Identity(m, m), design.A), kron(f.transpose(), design.G);
    const MatX w_y = design.Q_Y.llt().solve(MatX::Identity(2 * n * m, 2 * n * m));
    const VecX y_vec = Eigen::Map<const VecX>(y.data(), y.size());
    model.normal_gnss = h_gnss.transpose() * w_y * h_gnss;
    model.rhs_gnss = h_gnss.transpose() * w_y * y_vec;

    model.normal_fiveg = MatX::Zero(nx, nx);
    model.rhs_fiveg = VecX::Zero(nx);
    if (aoa != nullptr && aoa->E.cols() > 0) {
        const Eigen::Index l = aoa->E.cols();
        model.n_bs = static_cast<int>(l);
        MatX h_5g = MatX::Zero(3 * l, nx);
        h_5g.rightCols(9) = kron(Mat3::Identity(), MatX(aoa->E.transpose()));
        const MatX w_d = fiveg_weight_stacked(*aoa);
        const MatX dt = aoa->D.transpose();
        const VecX d_vec = Eigen::Map<const VecX>(dt.data(), dt.size());
        model.normal_fiveg = h_5g.transpose() * w_d * h_5g;
        model.rhs_fiveg = h_5g.transpose() * w_d * d_vec;
    }
    return model;
}

struct FloatSolution {
    VecX z_float;  // vec(Z), length NM
    Mat3 r_float;  // unconstrained attitude estimate, not orthonormal
    MatX q_z;      // NM x NM
    MatX q_zr;     // NM x 9
    MatX q_r;      // 9 x 9
    double condition = 0.0;
    int n_dd = 0;
    int n_baselines = 0;
};

inline FloatSolution solve_float(const HybridModel& model) {
    const MatX normal = model.normal_gnss + model.normal_fiveg;
    const VecX rhs = model.rhs_gnss + model.rhs_fiveg;
    const Eigen::Index nx = normal.rows();
    const int nz = model.n_dd * model.n_baselines;

    Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (normal + normal.transpose()));
    if (eig.info() != Eigen::Success)
        throw Error(ErrorCode::rank_deficient, "normal matrix eigendecomposition failed");
    const VecX& ev = eig.eigenvalues();
    const double lo = ev[0], hi = ev[nx - 1];
    if (!(lo > 0.0) || hi / lo > 1e14) {
        const VecX v = eig.eigenvectors().col(0).cwiseAbs();
        const double mass_z = v.head(nz).norm(), mass_r = v.tail(9).norm();
        const char* block = mass_z >= mass_r ? "ambiguity block" : "attitude block";
        throw Error(ErrorCode::rank_deficient,
                    std::string("normal matrix is singular or ill conditioned (") + block + ")");
    }

    const MatX q = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    VecX x = q * rhs;
    // Iterative refinement: the code/phase weight ratio puts the condition
    // number near 1e8, which costs half the mantissa in one solve.
    for (int pass = 0; pass < 2; ++pass) x += q * (rhs - normal * x);

    FloatSolution sol;
    sol.z_float = x.head(nz);
    sol.r_float = Eigen::Map<const Mat3>(x.tail(9).data());
    sol.q_z = q.topLeftCorner(nz, nz);
    sol.q_zr = q.topRightCorner(nz, 9);
    sol.q_r = q.bottomRightCorner(9, 9);
    sol.condition = hi / lo;
    sol.n_dd = model.n_dd;
    sol.n_baselines = model.n_baselines;
    return sol;
}

// Precomputed pieces for conditioning the attitude on a candidate integer
// matrix: vec(R|Z) = vec(R^) - gain (z^ - z), with a Z-independent covariance.
struct AttitudeConditioner {
    VecX z_float;
    Mat3 r_float;
    MatX gain;     // 9 x NM
    MatX q_cond;   // 9 x 9
    MatX w_cond;   // 9 x 9, regularized inverse of q_cond
    double w_min_eig = 0.0;
    Vec9 w_eigvals = Vec9::Zero(); // spectrum of w_cond, ascending
    Mat9 w_eigvecs_t = Mat9::Identity();
};

inline AttitudeConditioner make_conditioner(const FloatSolution& sol) {
    AttitudeConditioner c;
    c.z_float = sol.z_float;
    c.r_float = sol.r_float;
    const auto llt = sol.q_z.llt();
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::covariance_not_spd, "ambiguity covariance is not positive definite");
    c.gain = llt.solve(sol.q_zr).transpose();
    MatX q_cond = sol.q_r - c.gain * sol.q_zr;
    c.q_cond = 0.5 * (q_cond + q_cond.transpose());
    c.w_cond = sym_pinv(c.q_cond);
    Eigen::SelfAdjointEigenSolver<MatX> eig(c.w_cond);
    c.w_min_eig = std::max(0.0, eig.eigenvalues()[0]);
    c.w_eigvals = eig.eigenvalues().cwiseMax(0.0);
    c.w_eigvecs_t = eig.eigenvectors().transpose();
    return c;
}

inline Mat3 conditional_attitude(const AttitudeConditioner& c, const VecXi& z) {
    const VecX vr =
        Eigen::Map<const VecX>(c.r_float.data(), 9) - c.gain * (c.z_float - z.cast<double>());
    return Eigen::Map<const Mat3>(vr.data());
}

namespace detail {

// Squared Frobenius distance from an arbitrary 3x3 matrix to SO(3).
inline double frob_dist_sq_so3(const Mat3& t) {
    Eigen::JacobiSVD<Mat3> svd(t);
    const Vec3 s = svd.singularValues();
    const double sgn = t.determinant() < 0.0 ? -1.0 : 1.0;
    const double d = t.squaredNorm() + 3.0 - 2.0 * (s[0] + s[1] + sgn * s[2]);
    return std::max(0.0, d);
}

// Lower bound on min_{R in SO(3)} (vec R - t)' W (vec R - t) through the
// convex relaxation SO(3) subset { x : |x|_F <= sqrt(3) }, with lam / t
// expressed in W's eigenbasis. The secular equation for the multiplier is
// solved with safeguarded Newton and the bound is evaluated at the bracket
// end known to lie on the feasible side, so rounding can only weaken it.
inline double so3_ball_lower_bound(const Vec9& lam, const Vec9& t) {
    double nrm2 = 0.0;
    for (int i = 0; i < 9; ++i)
        if (lam[i] > 0.0) nrm2 += t[i] * t[i];
    if (nrm2 <= 3.0) return 0.0;
    const double inv_r = 1.0 / std::sqrt(3.0);
    double mu_lo = 0.0; // |x(mu_lo)| >= sqrt(3): under-estimating side
    double mu_hi = -1.0;
    double mu = 0.0;
    for (int it = 0; it < 40; ++it) {
        double phi = 0.0, dphi = 0.0;
        for (int i = 0; i < 9; ++i) {
            if (lam[i] <= 0.0) continue;
            const double a = lam[i] * t[i] / (lam[i] + mu);
            phi += a * a;
            dphi -= 2.0 * a * a / (lam[i] + mu);
        }
        if (phi >= 3.0) mu_lo = mu; else mu_hi = mu;
        const double sp = std::sqrt(phi);
        const double psi = 1.0 / sp - inv_r;
        if (std::abs(psi) <= 1e-12 * inv_r) break;
        const double dpsi = -0.5 * dphi / (phi * sp);
        double next = mu - psi / dpsi;
        if (!std::isfinite(next) || next <= mu_lo || (mu_hi >= 0.0 && next >= mu_hi))
            next = mu_hi >= 0.0 ? 0.5 * (mu_lo + mu_hi) : 2.0 * mu + 1.0;
        mu = next;
    }
    double cost = 0.0;
    for (int i = 0; i < 9; ++i) {
        if (lam[i] <= 0.0) continue;
        const double e = mu_lo * t[i] / (lam[i] + mu_lo);
        cost += lam[i] * e * e;
    }
    return cost;
}

} // namespace detail

struct FixResult {
    MatXi z_fixed;  // N x M
    Rotation r_fixed{Mat3::Identity()};
    double cost = 0.0;
    bool bound_closed = false;
    int candidates_enumerated = 0;
    int candidates_evaluated = 0;
};

inline FixResult constrained_search(const FloatSolution& sol, const SearchControl& ctl = {}) {
    if (ctl.initial_candidates < 1 || ctl.max_candidates < ctl.initial_candidates ||
        ctl.expansion <= 1.0)
        throw Error(ErrorCode::configuration, "invalid search control");

    const AttitudeConditioner cond = make_conditioner(sol);
    const Decorrelation dec = decorrelate(sol.q_z);
    So3FitOptions fit_opt;
    fit_opt.gradient_tol = ctl.so3_tol;
    fit_opt.max_iterations = ctl.so3_max_iterations;

    struct Scored {
        double cost;
        Mat3 r;
    };
    std::map<std::vector<int>, Scored> cache;
    int evaluated = 0;

    const auto score = [&](const VecXi& z, const Mat3& r_cond) -> const Scored& {
        std::vector<int> key(z.data(), z.data() + z.size());
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        Scored s;
        try {
            const auto fit = weighted_so3_fix(r_cond, cond.w_cond, fit_opt);
            s.cost = fit.cost;
            s.r = fit.rotation.matrix();
        } catch (const NonConvergenceError& e) {
            // the carried iterate still upper-bounds the candidate's cost
            s.cost = e.best_cost;
            s.r = e.best_iterate;
        }
        ++evaluated;
        return cache.emplace(std::move(key), std::move(s)).first->second;
    };

    FixResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    bool have_best = false;

    int k = ctl.initial_candidates;
    int processed = 0; // prefix handled in earlier rounds; the enumeration is
                       // prefix-stable and the incumbent only improves, so
                       // prior skip/prune decisions stay valid
    while (true) {
        const auto cands = ils_enumerate(sol.z_float, dec, k + 1);
        bool closed = false;
        for (int i = processed; i < k; ++i) {
            const auto& c = cands[i];
            if (have_best && c.distance >= best_cost) {
                closed = true; // sorted: every remaining candidate is dominated
                break;
            }
            const Mat3 r_cond = conditional_attitude(cond, c.z);
            if (have_best) {
                const Vec9 t9 =
                    cond.w_eigvecs_t * Eigen::Map<const Vec9>(r_cond.data());
                if (c.distance + detail::so3_ball_lower_bound(cond.w_eigvals, t9) >= best_cost)
                    continue;
                if (cond.w_min_eig > 0.0 &&
                    c.distance + cond.w_min_eig * detail::frob_dist_sq_so3(r_cond) >= best_cost)
                    continue;
            }
            const Scored& s = score(c.z, r_cond);
            const double total = c.distance + s.cost;
            if (!have_best || total < best_cost) {
                best_cost = total;
                best.z_fixed =
                    Eigen::Map<const MatXi>(c.z.data(), sol.n_dd, sol.n_baselines);
                best.r_fixed = Rotation(s.r);
                best.cost = total;
                have_best = true;
            }
        }
        processed = k;
        best.candidates_enumerated = static_cast<int>(cands.size());
        best.candidates_evaluated = evaluated;
        if (!closed && have_best && best_cost <= cands[k].distance) closed = true;
        if (closed) {
            best.bound_closed = true;
            return best;
        }
        if (k >= ctl.max_candidates) {
            best.bound_closed = false;
            return best;
        }
        k = std::min(ctl.max_candidates,
                     std::max(k + 1, static_cast<int>(std::lround(k * ctl.expansion))));
    }
}

inline FixResult hybrid_solve(const GnssDesign& design, const MatX& y, const MatX& f,
                              const AoaSet& aoa, const SearchControl& ctl = {}) {
    const HybridModel model = assemble_hybrid(design, y, f, &aoa);
    return constrained_search(solve_float(model), ctl);
}

inline FixResult gnss_only_solve(const GnssDesign& design, const MatX& y, const MatX& f,
                                 const SearchControl& ctl = {}) {
    const HybridModel model = assemble_hybrid(design, y, f, nullptr);
    return constrained_search(solve_float(model), ctl);
}

// Attitude from direction measurements alone: the quadratic cost in vec(R)
// collapses to a weighted orthogonal fit around the unconstrained minimizer.
inline Rotation fiveg_only_solve(const AoaSet& aoa, const So3FitOptions& opt = {}) {
    const Eigen::Index l = aoa.E.cols();
    if (l < 2)
        throw Error(ErrorCode::observability, "attitude needs at least two anchor directions");
    Eigen::JacobiSVD<MatX> svd(MatX(aoa.E));
    if (svd.singularValues()[1] <= 1e-10 * svd.singularValues()[0])
        throw Error(ErrorCode::observability, "anchor directions are collinear");

    const MatX h = kron(Mat3::Identity(), MatX(aoa.E.transpose()));
    const MatX w = fiveg_weight_stacked(aoa);
    const MatX normal = h.transpose() * w * h;
    const MatX dt = aoa.D.transpose();
    const VecX rhs = h.transpose() * w * Eigen::Map<const VecX>(dt.data(), dt.size());
    const VecX x = sym_pinv(normal) * rhs;
    const Mat3 target = Eigen::Map<const Mat3>(x.data());
    // Rank-2 per-station weights make the antipodal flip of each direction
    // cost-free, so the fit landscape has deep spurious minima; seed the
    // restarts with the isotropic orthogonal fit to the raw directions.
    So3FitOptions seeded = opt;
    if (!seeded.initial_guess)
        seeded.initial_guess = project_to_so3(Mat3(aoa.E * aoa.D.transpose())).matrix();
    return weighted_so3_fix(target, normal, seeded).rotation;
}

} // namespace attfuse

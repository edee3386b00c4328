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
// Integer least squares on the ambiguity lattice. The float covariance is
// decorrelated by unimodular integer transforms (integer Gauss steps plus
// symmetric permutations, iterated to a fixpoint), then candidates are
// enumerated in order of increasing squared Mahalanobis distance with a
// depth-first search over the conditional (L^T D L) tree.
//
// Conventions: Q = L^T diag(d) L with L unit lower triangular. For the
// unimodular transform S the reduced covariance is S^T Q S, the float vector
// maps as w = S^T z and candidates map back as z = S^-T w.

#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "types.hpp"

namespace attfuse {

struct LtdlFactors {
    MatX L;
    VecX d;
};

inline LtdlFactors ltdl_decompose(const MatX& q) {
    const Eigen::Index n = q.rows();
    if (q.cols() != n) throw Error(ErrorCode::configuration, "covariance must be square");
    MatX a = 0.5 * (q + q.transpose());
    LtdlFactors f;
    f.L = MatX::Zero(n, n);
    f.d = VecX::Zero(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        f.d[i] = a(i, i);
        if (!(f.d[i] > 0.0))
            throw Error(ErrorCode::covariance_not_spd, "ambiguity covariance is not positive definite");
        const double s = std::sqrt(f.d[i]);
        for (Eigen::Index j = 0; j <= i; ++j) f.L(i, j) = a(i, j) / s;
        for (Eigen::Index j = 0; j < i; ++j)
            for (Eigen::Index k = 0; k <= j; ++k) a(j, k) -= f.L(i, k) * f.L(i, j);
        for (Eigen::Index j = 0; j <= i; ++j) f.L(i, j) /= f.L(i, i);
    }
    return f;
}

struct Decorrelation {
    MatX transform;     // S, integer entries, |det| = 1
    MatX transform_inv; // S^-1, integer entries
    MatX q_reduced;     // S^T Q S
    LtdlFactors factors;
};

inline Decorrelation decorrelate(const MatX& q_z) {
    const Eigen::Index n = q_z.rows();
    Decorrelation dec;
    dec.factors = ltdl_decompose(q_z);
    dec.transform = MatX::Identity(n, n);
    dec.transform_inv = MatX::Identity(n, n);
    MatX& L = dec.factors.L;
    VecX& d = dec.factors.d;
    MatX& S = dec.transform;
    MatX& Sinv = dec.transform_inv;

    const auto gauss = [&](Eigen::Index i, Eigen::Index j) {
        const double mu = std::round(L(i, j));
        if (mu == 0.0) return;
        for (Eigen::Index k = i; k < n; ++k) L(k, j) -= mu * L(k, i);
        S.col(j) -= mu * S.col(i);
        Sinv.row(i) += mu * Sinv.row(j);
    };

    Eigen::Index j = n - 2, k = n - 2;
    while (j >= 0) {
        if (j <= k)
            for (Eigen::Index i = j + 1; i < n; ++i) gauss(i, j);
        const double del = d[j] + L(j + 1, j) * L(j + 1, j) * d[j + 1];
        if (del + 1e-6 < d[j + 1]) {
            // swap ambiguities j and j+1 and refactor the two rows
            const double eta = d[j] / del;
            const double lam = d[j + 1] * L(j + 1, j) / del;
            d[j] = eta * d[j + 1];
            d[j + 1] = del;
            for (Eigen::Index c = 0; c < j; ++c) {
                const double a0 = L(j, c), a1 = L(j + 1, c);
                L(j, c) = -L(j + 1, j) * a0 + a1;
                L(j + 1, c) = eta * a0 + lam * a1;
            }
            L(j + 1, j) = lam;
            for (Eigen::Index r = j + 2; r < n; ++r) std::swap(L(r, j), L(r, j + 1));
            S.col(j).swap(S.col(j + 1));
            Sinv.row(j).swap(Sinv.row(j + 1));
            k = j;
            j = n - 2;
        } else {
            --j;
        }
    }
    dec.q_reduced = dec.transform.transpose() * (0.5 * (q_z + q_z.transpose())) * dec.transform;
    return dec;
}

struct IlsCandidate {
    VecXi z;
    double distance; // squared Mahalanobis distance to the float vector
};

namespace detail {

inline double sgn_step(double x) { return x <= 0.0 ? -1.0 : 1.0; }

// Depth-first best-first enumeration over the conditional tree; keeps the
// `count` smallest leaves. Operates in the decorrelated basis.
inline std::vector<std::pair<VecX, double>> se_search(const LtdlFactors& f, const VecX& zs, int count) {
    const Eigen::Index n = zs.size();
    const MatX& L = f.L;
    const VecX& d = f.d;

    VecX dist = VecX::Zero(n), zb = VecX::Zero(n), z = VecX::Zero(n), step = VecX::Zero(n);
    MatX corr = MatX::Zero(n, n); // accumulated conditional corrections

    std::vector<std::pair<VecX, double>> found(count, {VecX::Zero(n), 0.0});
    int nn = 0;
    // max-heap over the kept candidates, (distance, slot)
    std::priority_queue<std::pair<double, int>> heap;
    double maxdist = std::numeric_limits<double>::infinity();

    Eigen::Index k = n - 1;
    zb[k] = zs[k];
    z[k] = std::round(zb[k]);
    double y = zb[k] - z[k];
    step[k] = sgn_step(y);

    const long long guard = 10000000LL + 4000LL * count;
    for (long long it = 0; it < guard; ++it) {
        const double newdist = dist[k] + y * y / d[k];
        if (newdist < maxdist) {
            if (k != 0) {
                --k;
                dist[k] = newdist;
                for (Eigen::Index i = 0; i <= k; ++i)
                    corr(k, i) = corr(k + 1, i) + (z[k + 1] - zb[k + 1]) * L(k + 1, i);
                zb[k] = zs[k] + corr(k, k);
                z[k] = std::round(zb[k]);
                y = zb[k] - z[k];
                step[k] = sgn_step(y);
            } else {
                if (nn < count) {
                    found[nn] = {z, newdist};
                    heap.emplace(newdist, nn);
                    if (++nn == count) maxdist = heap.top().first;
                } else {
                    const int slot = heap.top().second;
                    heap.pop();
                    found[slot] = {z, newdist};
                    heap.emplace(newdist, slot);
                    maxdist = heap.top().first;
                }
                z[0] += step[0];
                y = zb[0] - z[0];
                step[0] = -step[0] - sgn_step(step[0]);
            }
        } else {
            if (k == n - 1) {
                std::sort(found.begin(), found.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; });
                found.resize(nn);
                return found;
            }
            ++k;
            z[k] += step[k];
            y = zb[k] - z[k];
            step[k] = -step[k] - sgn_step(step[k]);
        }
    }
    throw Error(ErrorCode::non_convergence, "lattice enumeration exceeded its node budget");
}

} // namespace detail

inline std::vector<IlsCandidate> ils_enumerate(const VecX& z_float, const Decorrelation& dec, int count) {
    if (count < 1) throw Error(ErrorCode::configuration, "candidate count must be >= 1");
    const VecX ws = dec.transform.transpose() * z_float;
    const auto reduced = detail::se_search(dec.factors, ws, count);
    std::vector<IlsCandidate> out;
    out.reserve(reduced.size());
    for (const auto& [w, dist] : reduced) {
        const VecX zr = dec.transform_inv.transpose() * w;
        IlsCandidate c;
        c.z.resize(zr.size());
        for (Eigen::Index i = 0; i < zr.size(); ++i) c.z[i] = static_cast<int>(std::llround(zr[i]));
        c.distance = dist;
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<IlsCandidate> ils_enumerate(const VecX& z_float, const MatX& q_z, int count) {
    return ils_enumerate(z_float, decorrelate(q_z), count);
}

} // namespace attfuse

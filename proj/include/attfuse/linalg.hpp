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

#include "types.hpp"

namespace attfuse {

inline MatX kron(const MatX& a, const MatX& b) {
    MatX k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues below
// tol_rel * lambda_max are treated as exact zeros.
inline MatX sym_pinv(const MatX& q, double tol_rel = 1e-12) {
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (q + q.transpose()));
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::covariance_not_spd, "eigendecomposition failed");
    const VecX ev = es.eigenvalues();
    const double lmax = ev.cwiseAbs().maxCoeff();
    VecX inv = VecX::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] > tol_rel * lmax) inv[i] = 1.0 / ev[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace attfuse

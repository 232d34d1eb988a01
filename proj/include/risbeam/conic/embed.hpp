// SPDX-License-Identifier: Apache-2.0
//
// risbeam — constructive and destructive RIS beamforming in ISAC MIMO networks
// Copyright (C) 2026 The risbeam authors
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

#ifndef RISBEAM_CONIC_EMBED_HPP
#define RISBEAM_CONIC_EMBED_HPP

#include "risbeam/common.hpp"

namespace risbeam::conic {

// ---------------------------------------------------------------------------
// Symmetric vectorization.
//
// svec packs the lower triangle of a side-q symmetric matrix column-major
// with off-diagonal entries scaled by sqrt(2), so dot(svec A, svec B)
// equals Tr(A B).
// ---------------------------------------------------------------------------

inline int svec_dim(int side) { return side * (side + 1) / 2; }

inline rvec svec(const rmat &a) {
    const int q = static_cast<int>(a.rows());
    rvec v(svec_dim(q));
    int idx = 0;
    for (int j = 0; j < q; ++j) {
        v(idx++) = a(j, j);
        for (int i = j + 1; i < q; ++i)
            v(idx++) = M_SQRT2 * a(i, j);
    }
    return v;
}

inline rmat smat(const rvec &v, int side) {
    rmat a(side, side);
    int idx = 0;
    for (int j = 0; j < side; ++j) {
        a(j, j) = v(idx++);
        for (int i = j + 1; i < side; ++i) {
            const double x = v(idx++) * M_SQRT1_2;
            a(i, j) = x;
            a(j, i) = x;
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Complex Hermitian <-> real symmetric embedding.
//
// embed(H) = [[Re H, -Im H], [Im H, Re H]] is PSD iff H is, has the
// eigenvalues of H doubled, and satisfies
// Tr(embed(A) embed(B)) = 2 Re Tr(A B).
// ---------------------------------------------------------------------------

inline rmat hermitian_embed(const cmat &h, double herm_tol = 1e-9) {
    const Eigen::Index n = h.rows();
    if (h.cols() != n)
        throw std::invalid_argument("hermitian_embed: matrix not square");
    const double scale = std::max(h.norm(), 1e-300);
    if ((h - h.adjoint()).norm() > herm_tol * scale)
        throw std::invalid_argument("hermitian_embed: input not Hermitian");
    rmat out(2 * n, 2 * n);
    const rmat re = h.real();
    const rmat im = h.imag();
    out.topLeftCorner(n, n) = re;
    out.bottomRightCorner(n, n) = re;
    out.topRightCorner(n, n) = -im;
    out.bottomLeftCorner(n, n) = im;
    return symmetrize(out);
}

/// Recovers the complex Hermitian matrix from (a possibly inexact) real
/// embedding by structure averaging; exact on true embeddings.
inline cmat hermitian_extract(const rmat &y) {
    const Eigen::Index n2 = y.rows();
    if (y.cols() != n2 || n2 % 2 != 0)
        throw std::invalid_argument("hermitian_extract: bad dimensions");
    const Eigen::Index n = n2 / 2;
    const rmat re =
        0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
    const rmat im =
        0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
    cmat out(n, n);
    out.real() = 0.5 * (re + re.transpose());
    out.imag() = 0.5 * (im - im.transpose());
    return out;
}

} // namespace risbeam::conic

#endif // RISBEAM_CONIC_EMBED_HPP

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
//
// Quadratic-form layer: every Hermitian matrix/vector the two optimization
// algorithms consume is constructed here, together with the analytic sensing
// SNR / SINR evaluations and a Monte-Carlo oracle used for validation.
//
// Conventions.  Theta = diag(theta), T = g g^H, H_sT = h_sT h_sT^H and
// u = H_t^H diag(g) theta is the device-to-target composite steer.  The
// per-stream sensing SNR admits three algebraically equal representations:
//
//   (a) rho_l = f_l^H Gamma f_l                    (precoder-side form)
//   (b) rho_l = tt^H Q_l tt + 2 Re(tt^H p_l) + c_l (lifted RIS-side form,
//       tt = theta_tilde = vec(theta theta^H))
//   (c) rho_l = dr^2 |f_l^H u|^2 ||u||^2 + theta^H M_l theta + c_l
//       (decoupled form used by the minimization path)
//
// The unit tests pin all three against each other and against Monte-Carlo.

#ifndef RISBEAM_QUADRATICS_HPP
#define RISBEAM_QUADRATICS_HPP

#include "risbeam/model.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace risbeam {

// ---------------------------------------------------------------------------
// Elementary pieces
// ---------------------------------------------------------------------------

/// u = H_t^H diag(g) theta = H_t^H diag(theta) g.
inline cvec composite_steer(const ChannelSet &ch, const cvec &theta) {
    require(theta.size() == ch.num_ris_elements(), "composite_steer: theta length");
    return ch.bs_to_ris.adjoint() * theta.cwiseProduct(ch.ris_to_target);
}

/// theta_tilde = vec(theta theta^H); entry (j-1)N+i equals theta_i theta_j^*.
/// Satisfies vec(Theta T Theta^H) = diag(vec(T)) theta_tilde for any N x N T.
inline cvec theta_tilde(const cvec &theta) {
    const Eigen::Index n = theta.size();
    cvec tt(n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            tt(j * n + i) = theta(i) * std::conj(theta(j));
    return tt;
}

// ---------------------------------------------------------------------------
// Gamma and the analytic sensing SNR
// ---------------------------------------------------------------------------

/// Gamma = E[H_T^H H_T] for the Swerling-I pair (c_r, c_s):
///   ds^2 B B + dm B A + dm^* A B + dr^2 A A,
/// with A = H_t^H Theta T Theta^H H_t = u u^H and B = h_sT h_sT^H.
/// Hermitized against round-off; PSD by construction.
inline cmat gamma_matrix(const ChannelSet &ch, const RcsModel &rcs,
                         const cvec &theta) {
    const cvec u = composite_steer(ch, theta);
    const cvec &h = ch.bs_to_target;
    require(u.size() == h.size(), "gamma_matrix: dimension mismatch");

    const cmat a = u * u.adjoint();
    const cmat b = h * h.adjoint();
    const cmat gamma = rcs.static_var * b * b + rcs.cross_moment * b * a +
                       std::conj(rcs.cross_moment) * a * b +
                       rcs.reflected_var * a * a;
    return hermitize(gamma);
}

/// rho = (1/sigma_T^2) sum_l f_l^H Gamma f_l (linear scale, nonnegative).
inline double sensing_snr(const cmat &gamma, const cmat &precoder,
                          double sigma_t_sq) {
    require(gamma.rows() == precoder.rows(), "sensing_snr: dimension mismatch");
    double rho = 0.0;
    for (Eigen::Index l = 0; l < precoder.cols(); ++l)
        rho += std::real(precoder.col(l).dot(gamma * precoder.col(l)));
    return std::max(rho, 0.0) / sigma_t_sq;
}

inline double sensing_snr(const ChannelSet &ch, const RcsModel &rcs,
                          const cvec &theta, const cmat &precoder,
                          double sigma_t_sq) {
    return sensing_snr(gamma_matrix(ch, rcs, theta), precoder, sigma_t_sq);
}

/// Monte-Carlo estimate of the sensing SNR from the two-way channel
/// H_T = c_r u u^H + c_s h h^H with fresh RCS draws; validation oracle for
/// the analytic expressions.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

inline McEstimate sensing_snr_mc(const ChannelSet &ch, const RcsModel &rcs,
                                 const cvec &theta, const cmat &precoder,
                                 int samples, std::uint64_t seed) {
    require(samples >= 1, "sensing_snr_mc: samples must be >= 1");
    const cvec u = composite_steer(ch, theta);
    const cvec &h = ch.bs_to_target;
    const Eigen::Index num_streams = precoder.cols();

    // H_T f = c_r (u^H f) u + c_s (h^H f) h, so per draw only the mixing of
    // two fixed vectors changes.
    const double uu = u.squaredNorm();
    const double hh = h.squaredNorm();
    const cplx uh = u.dot(h); // u^H h
    cvec uf(num_streams), hf(num_streams);
    for (Eigen::Index l = 0; l < num_streams; ++l) {
        uf(l) = u.dot(precoder.col(l));
        hf(l) = h.dot(precoder.col(l));
    }

    const auto draws = sample_rcs(rcs, samples, seed);
    double sum = 0.0, sumsq = 0.0;
    for (const auto &d : draws) {
        double rho = 0.0;
        for (Eigen::Index l = 0; l < num_streams; ++l) {
            const cplx alpha = d.reflected * uf(l);
            const cplx beta = d.statics * hf(l);
            rho += std::norm(alpha) * uu + std::norm(beta) * hh +
                   2.0 * std::real(alpha * std::conj(beta) * std::conj(uh));
        }
        sum += rho;
        sumsq += rho * rho;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(sumsq / n - mean * mean, 0.0);
    McEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(var / n);
    return est;
}

inline McEstimate sensing_snr_mc(const ChannelSet &ch, const RcsModel &rcs,
                                 const cvec &theta, const cmat &precoder,
                                 double sigma_t_sq, int samples,
                                 std::uint64_t seed) {
    McEstimate est = sensing_snr_mc(ch, rcs, theta, precoder, samples, seed);
    est.mean /= sigma_t_sq;
    est.std_error /= sigma_t_sq;
    return est;
}

// ---------------------------------------------------------------------------
// SINR
// ---------------------------------------------------------------------------

/// SINR of UE k (0-based) under phase vector theta and precoder F.
inline double sinr(const ChannelSet &ch, const cvec &theta, const cmat &precoder,
                   int ue, double noise_var) {
    const cvec h = cascaded_channel(ch, theta, ue);
    double signal = 0.0, interference = 0.0;
    for (Eigen::Index l = 0; l < precoder.cols(); ++l) {
        const double p = std::norm(h.dot(precoder.col(l)));
        if (l == ue)
            signal = p;
        else
            interference += p;
    }
    return signal / (noise_var + interference);
}

/// All K SINRs at once (shares the cascaded-channel computation).
inline rvec all_sinr(const ChannelSet &ch, const cvec &theta, const cmat &precoder,
                     const rvec &noise_vars) {
    const int k = ch.num_ues();
    require(noise_vars.size() == k, "all_sinr: noise vector length");
    rvec out(k);
    for (int i = 0; i < k; ++i)
        out(i) = sinr(ch, theta, precoder, i, noise_vars(i));
    return out;
}

// ---------------------------------------------------------------------------
// Lifted RIS-side quadratics (maximization path)
// ---------------------------------------------------------------------------

/// Hermitian forms of representation (b): per-stream N^2 x N^2 PSD matrices
/// Q_l, linear parts p_l and theta-independent constants.
struct SensingQuadratics {
    cmat gamma;                     // Gamma at the theta used for construction
    std::vector<cmat> q;            // L matrices, N^2 x N^2, Hermitian PSD
    std::vector<cvec> p;            // L vectors, length N^2
    cmat target_outer;              // T = g g^H
    std::vector<double> const_terms; // ds^2 Tr(H_sT^H H_sT f_l f_l^H)
};

/// Builds Q_l, p_l and constants for a fixed precoder.
///
/// Q_l = D^H ((H_t^* H_t^T) kron (dr^2 H_t f_l f_l^H H_t^H)) D with
/// D = diag(vec(T)); p_l = D^H vec(dm^* H_t H_sT f_l f_l^H H_t^H).
inline SensingQuadratics build_sensing_quadratics(const ChannelSet &ch,
                                                  const RcsModel &rcs,
                                                  const cmat &precoder) {
    const int n = ch.num_ris_elements();
    const int m = ch.num_antennas();
    require(precoder.rows() == m, "build_sensing_quadratics: precoder rows");
    const Eigen::Index num_streams = precoder.cols();

    SensingQuadratics sq;
    sq.target_outer = ch.ris_to_target * ch.ris_to_target.adjoint();
    const cvec vec_t = Eigen::Map<const cvec>(sq.target_outer.data(), n * n);

    const cmat &ht = ch.bs_to_ris; // N x M
    const cmat left = ht.conjugate() * ht.transpose(); // H_t^* H_t^T, N x N
    const cvec &h = ch.bs_to_target;
    const cmat h_st = h * h.adjoint();

    sq.q.resize(num_streams);
    sq.p.resize(num_streams);
    sq.const_terms.resize(num_streams);

    for (Eigen::Index l = 0; l < num_streams; ++l) {
        const cvec f = precoder.col(l);
        const cvec htf = ht * f; // N
        const cmat right = rcs.reflected_var * htf * htf.adjoint(); // N x N

        cmat q(n * n, n * n);
        for (int jb = 0; jb < n; ++jb)
            for (int ib = 0; ib < n; ++ib)
                q.block(ib * n, jb * n, n, n) = left(ib, jb) * right;
        // sandwich with diag(vec(T)): scale rows by conj, columns by value
        q = vec_t.conjugate().asDiagonal() * q * vec_t.asDiagonal();
        sq.q[l] = hermitize(q);

        const cmat inner = std::conj(rcs.cross_moment) * ht * h_st * f *
                           f.adjoint() * ht.adjoint(); // N x N
        const cvec vec_inner = Eigen::Map<const cvec>(inner.data(), n * n);
        sq.p[l] = vec_t.conjugate().asDiagonal() * vec_inner;

        // ds^2 Tr(H_sT^H H_sT f f^H) = ds^2 ||h||^2 |h^H f|^2
        sq.const_terms[l] = rcs.static_var * h.squaredNorm() * std::norm(h.dot(f));
    }
    return sq;
}

/// Representation-(b) evaluation of rho_l (without the noise division).
inline double rho_stream_lifted(const SensingQuadratics &sq, const cvec &tt,
                                int l) {
    const cplx quad = tt.dot(sq.q[l] * tt); // tt^H Q tt
    const cplx lin = tt.dot(sq.p[l]);       // tt^H p
    return std::real(quad) + 2.0 * std::real(lin) + sq.const_terms[l];
}

// ---------------------------------------------------------------------------
// Attack-side quadratics (minimization path)
// ---------------------------------------------------------------------------

/// Hermitian forms of representation (c) plus the bordered matrices used by
/// the convex-concave procedure.  All (N+1)-sized blocks act on
/// theta_hat = [theta; 1].
struct AttackQuadratics {
    cmat g_diag;                      // diag(g), N x N
    std::vector<cmat> m;              // M_l, N x N Hermitian (indefinite)
    std::vector<cmat> m_hat_plus;     // PSD part of bordered M_l, (N+1)^2
    std::vector<cmat> m_hat_minus;    // NSD part
    std::vector<cmat> u;              // U_k, (N+1)^2 Hermitian PSD
    std::vector<std::vector<cmat>> r; // R_{k,l}, K x L of (N+1)^2, PSD
    cmat tau;                         // L x (N+1), rows [f_l^H H_t^H G, 0]
    cmat h_hat;                       // M x (N+1), [H_t^H G, 0]
    std::vector<double> const_terms;  // ds^2 ||h_sT||^2 |h_sT^H f_l|^2
    double reflected_var = 0.0;       // dr^2, kept for the decoupled form
};

namespace detail {

/// Splits a Hermitian matrix into PSD + NSD parts by eigendecomposition.
/// Eigenvalues within 1e-12 * max|eig| of zero go to the PSD part so that
/// numerically zero modes do not flip sides between runs.
inline void psd_nsd_split(const cmat &a, cmat &plus, cmat &minus) {
    Eigen::SelfAdjointEigenSolver<cmat> eig(a);
    const rvec &vals = eig.eigenvalues();
    const cmat &vecs = eig.eigenvectors();
    const double scale = vals.cwiseAbs().maxCoeff();
    const double thresh = -1e-12 * scale;
    rvec vp = vals, vm = vals;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) >= thresh) {
            vm(i) = 0.0;
            vp(i) = vals(i);
        } else {
            vp(i) = 0.0;
        }
    }
    plus = hermitize(vecs * vp.asDiagonal() * vecs.adjoint());
    minus = hermitize(vecs * vm.asDiagonal() * vecs.adjoint());
}

/// [[A, b],[b^H, c]] border of an N x N block.
inline cmat border(const cmat &a, const cvec &b, double c) {
    const Eigen::Index n = a.rows();
    cmat out = cmat::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = a;
    out.topRightCorner(n, 1) = b;
    out.bottomLeftCorner(1, n) = b.adjoint();
    out(n, n) = c;
    return out;
}

} // namespace detail

/// Builds every matrix of the minimization path for a fixed precoder.
inline AttackQuadratics build_attack_quadratics(const ChannelSet &ch,
                                                const RcsModel &rcs,
                                                const cmat &precoder) {
    const int n = ch.num_ris_elements();
    const int m = ch.num_antennas();
    const int k = ch.num_ues();
    require(precoder.rows() == m, "build_attack_quadratics: precoder rows");
    const int num_streams = static_cast<int>(precoder.cols());

    AttackQuadratics aq;
    aq.reflected_var = rcs.reflected_var;
    aq.g_diag = ch.ris_to_target.asDiagonal();
    const cmat &ht = ch.bs_to_ris;
    const cvec &h = ch.bs_to_target;
    const cmat h_st = h * h.adjoint();
    const cmat ht_g = ht.adjoint() * aq.g_diag; // H_t^H G, M x N

    aq.m.resize(num_streams);
    aq.m_hat_plus.resize(num_streams);
    aq.m_hat_minus.resize(num_streams);
    aq.const_terms.resize(num_streams);
    aq.tau = cmat::Zero(num_streams, n + 1);
    aq.h_hat = cmat::Zero(m, n + 1);
    aq.h_hat.leftCols(n) = ht_g;

    for (int l = 0; l < num_streams; ++l) {
        const cvec f = precoder.col(l);
        const cmat ff = f * f.adjoint();
        const cmat core = std::conj(rcs.cross_moment) * h_st * ff +
                          rcs.cross_moment * ff * h_st;
        aq.m[l] = hermitize(ht_g.adjoint() * core * ht_g);
        const cmat m_hat = detail::border(aq.m[l], cvec::Zero(n), 0.0);
        detail::psd_nsd_split(m_hat, aq.m_hat_plus[l], aq.m_hat_minus[l]);
        aq.tau.row(l).head(n) = (ht_g.adjoint() * f).adjoint(); // f^H H_t^H G
        aq.const_terms[l] = rcs.static_var * h.squaredNorm() * std::norm(h.dot(f));
    }

    // R_{k,l} and U_k = sum_{l != k} R_{k,l}
    aq.r.assign(k, std::vector<cmat>(num_streams));
    aq.u.resize(k);
    for (int i = 0; i < k; ++i) {
        const cmat hr = ch.ris_to_ue[i].asDiagonal(); // H_{r,k}
        const cmat cross = hr.adjoint() * ht;         // N x M
        const cvec &hs = ch.bs_to_ue[i];
        cmat u_acc = cmat::Zero(n + 1, n + 1);
        for (int l = 0; l < num_streams; ++l) {
            const cvec f = precoder.col(l);
            const cvec cf = cross * f; // H_{r,k}^H H_t f
            const cplx sf = hs.dot(f); // h_{s,k}^H f
            const cmat r_kl = detail::border(cf * cf.adjoint(), cf * std::conj(sf),
                                             std::norm(sf));
            aq.r[i][l] = hermitize(r_kl);
            if (l != i)
                u_acc += aq.r[i][l];
        }
        aq.u[i] = hermitize(u_acc);
    }
    return aq;
}

/// Representation-(c) evaluation of rho_l (without the noise division):
/// dr^2 |tau_l theta_hat|^2 ||H_hat theta_hat||^2 + theta^H M_l theta + c_l.
inline double rho_stream_decoupled(const AttackQuadratics &aq,
                                   const cvec &theta_hat, int l) {
    const cplx tau_th = (aq.tau.row(l) * theta_hat)(0);
    const double r2 = (aq.h_hat * theta_hat).squaredNorm();
    const cvec theta = theta_hat.head(theta_hat.size() - 1);
    const double quad = std::real(theta.dot(aq.m[l] * theta));
    return aq.reflected_var * std::norm(tau_th) * r2 + quad + aq.const_terms[l];
}

} // namespace risbeam

#endif // RISBEAM_QUADRATICS_HPP

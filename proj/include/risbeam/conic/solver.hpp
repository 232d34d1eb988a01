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
// Primal-dual interior-point solver for the standard form
//
//   minimize    c' x
//   subject to  A x = b,  x in K,
//
// K a product of free, zero, nonnegative, second-order and PSD blocks.
// The method is a homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector step, equivalent to solving
//
//   A' y + G' z + c tau = 0,   -A x + b tau = 0,
//   -G x + h tau - s = 0,      -c' x - b' y - h' z - kappa = 0,
//   s in K+, z in K+*, tau >= 0, kappa >= 0,
//
// with the structural choice G = -E_c (cone-variable selector), h = 0.
// Free variables are kept explicitly; each Newton step reduces to a dense
// saddle system in (free variables, equality multipliers) after the conic
// part is eliminated through the scaling, so SDP blocks never enter a
// factorization at their svec dimension.

#ifndef RISBEAM_CONIC_SOLVER_HPP
#define RISBEAM_CONIC_SOLVER_HPP

#include "risbeam/conic/program.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <vector>

namespace risbeam::conic {

struct SolverSettings {
    double tolerance = 1e-7;
    int max_iterations = 200;
    double static_reg = 1e-11; // static regularization of the saddle solve
    bool equilibrate = true;
    int verbose = 0;
};

enum class SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    SlowProgress,
    IterationLimit
};

inline const char *to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal:
        return "optimal";
    case SolveStatus::PrimalInfeasible:
        return "infeasible";
    case SolveStatus::DualInfeasible:
        return "unbounded";
    case SolveStatus::SlowProgress:
        return "slow_progress";
    default:
        return "iteration_limit";
    }
}

struct ConicSolution {
    SolveStatus status = SolveStatus::IterationLimit;
    rvec x; // primal values, original scaling
    rvec y; // equality multipliers with A' y + z = c
    rvec z; // dual cone variables scattered over all vars (zero on free)
    double objective = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double gap_abs = 0.0;
    double gap_rel = 0.0;
    int iterations = 0;
    double wall_ms = 0.0;

    bool optimal() const { return status == SolveStatus::Optimal; }

    rvec segment(const ConicProgram &prog, const std::string &name) const {
        const auto [off, len] = prog.named_range(name);
        return x.segment(off, len);
    }
};

namespace detail {

struct SolverData {
    int n = 0;  // variables
    int p = 0;  // equality rows (incl. zero pins)
    int m = 0;  // cone dimension
    int nf = 0; // free variables
    std::vector<ConeBlock> cones; // proper cone blocks, offsets into cone space
    std::vector<int> cone_var;    // cone position -> variable index
    std::vector<int> free_var;    // free position -> variable index
    // equality matrix, by row: (var index, value); also split per cone block
    struct RowBlock {
        int block;                              // index into cones
        std::vector<std::pair<int, double>> nz; // (local cone index, value)
    };
    std::vector<std::vector<RowBlock>> row_cone; // per row
    std::vector<std::vector<std::pair<int, double>>> row_free; // (free pos, v)
    rvec b, c;
    double degree = 0.0;
    // scaling applied to the original program
    rvec col_scale;  // per variable
    rvec row_scale;  // per row
    double b_scale = 1.0, c_scale = 1.0;
};

// -- Jordan-algebra helpers over the cone space ------------------------------

class BlockOps {
  public:
    explicit BlockOps(const SolverData &d) : d_(d) {}

    rvec identity_e() const {
        rvec e = rvec::Zero(d_.m);
        for (const auto &blk : d_.cones) {
            switch (blk.type) {
            case ConeType::NonNeg:
                e.segment(blk.offset, blk.dim).setOnes();
                break;
            case ConeType::SecondOrder:
                e(blk.offset) = 1.0;
                break;
            case ConeType::Psd: {
                rvec sv = svec(rmat::Identity(blk.side, blk.side));
                e.segment(blk.offset, blk.dim) = sv;
                break;
            }
            default:
                break;
            }
        }
        return e;
    }

    /// Jordan product u o v.
    rvec jprod(const rvec &u, const rvec &v) const {
        rvec out(d_.m);
        for (const auto &blk : d_.cones) {
            const auto us = u.segment(blk.offset, blk.dim);
            const auto vs = v.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                out.segment(blk.offset, blk.dim) =
                    us.cwiseProduct(vs);
                break;
            case ConeType::SecondOrder: {
                rvec r(blk.dim);
                r(0) = us.dot(vs);
                r.tail(blk.dim - 1) = us(0) * vs.tail(blk.dim - 1) +
                                      vs(0) * us.tail(blk.dim - 1);
                out.segment(blk.offset, blk.dim) = r;
                break;
            }
            case ConeType::Psd: {
                const rmat mu = smat(us, blk.side);
                const rmat mv = smat(vs, blk.side);
                out.segment(blk.offset, blk.dim) =
                    svec(0.5 * (mu * mv + mv * mu));
                break;
            }
            default:
                break;
            }
        }
        return out;
    }

    /// Smallest cone eigenvalue of v (for interior checks / init shifts).
    double min_eig(const rvec &v) const {
        double me = std::numeric_limits<double>::infinity();
        for (const auto &blk : d_.cones) {
            const auto vs = v.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                me = std::min(me, vs.minCoeff());
                break;
            case ConeType::SecondOrder:
                me = std::min(me, vs(0) - vs.tail(blk.dim - 1).norm());
                break;
            case ConeType::Psd: {
                Eigen::SelfAdjointEigenSolver<rmat> eig(smat(vs, blk.side));
                me = std::min(me, eig.eigenvalues().minCoeff());
                break;
            }
            default:
                break;
            }
        }
        return d_.cones.empty() ? 1.0 : me;
    }

  private:
    const SolverData &d_;
};

// -- Nesterov-Todd scaling ----------------------------------------------------

class Scaling {
  public:
    Scaling(const SolverData &d) : d_(d) {
        nn_w_.resize(d.cones.size());
        nn_lam_.resize(d.cones.size());
        soc_w_.resize(d.cones.size());
        soc_winv_.resize(d.cones.size());
        psd_r_.resize(d.cones.size());
        psd_rinv_.resize(d.cones.size());
        psd_what_.resize(d.cones.size());
        psd_sigma_.resize(d.cones.size());
        lambda_ = rvec::Zero(d.m);
    }

    void set_identity() {
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            switch (blk.type) {
            case ConeType::NonNeg:
                nn_w_[i] = rvec::Ones(blk.dim);
                break;
            case ConeType::SecondOrder:
                soc_w_[i] = rmat::Identity(blk.dim, blk.dim);
                soc_winv_[i] = soc_w_[i];
                break;
            case ConeType::Psd:
                psd_r_[i] = rmat::Identity(blk.side, blk.side);
                psd_rinv_[i] = psd_r_[i];
                psd_what_[i] = psd_r_[i];
                break;
            default:
                break;
            }
        }
    }

    /// Computes the NT scaling for the current (s, z); returns false on
    /// numerical breakdown (non-interior point).
    bool compute(const rvec &s, const rvec &z) {
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto ss = s.segment(blk.offset, blk.dim);
            const auto zs = z.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg: {
                if ((ss.array() <= 0.0).any() || (zs.array() <= 0.0).any())
                    return false;
                nn_w_[i] = (ss.array() / zs.array()).sqrt().matrix();
                nn_lam_[i] = (ss.array() * zs.array()).sqrt().matrix();
                lambda_.segment(blk.offset, blk.dim) = nn_lam_[i];
                break;
            }
            case ConeType::SecondOrder: {
                const int q = blk.dim;
                const double zres = zs(0) * zs(0) - zs.tail(q - 1).squaredNorm();
                const double sres = ss(0) * ss(0) - ss.tail(q - 1).squaredNorm();
                if (zres <= 0.0 || sres <= 0.0 || zs(0) <= 0.0 || ss(0) <= 0.0)
                    return false;
                const rvec zbar = zs / std::sqrt(zres);
                const rvec sbar = ss / std::sqrt(sres);
                const double gamma = std::sqrt((1.0 + zbar.dot(sbar)) / 2.0);
                rvec jz = zbar;
                jz.tail(q - 1) = -zbar.tail(q - 1);
                const rvec wbar = (sbar + jz) / (2.0 * gamma);
                const double eta = std::pow(sres / zres, 0.25);
                rmat j = -rmat::Identity(q, q);
                j(0, 0) = 1.0;
                soc_w_[i] = eta * (2.0 * wbar * wbar.transpose() - j);
                soc_winv_[i] =
                    (2.0 * (j * wbar) * (j * wbar).transpose() - j) / eta;
                lambda_.segment(blk.offset, blk.dim) = soc_w_[i] * zs;
                break;
            }
            case ConeType::Psd: {
                const rmat ms = smat(ss, blk.side);
                const rmat mz = smat(zs, blk.side);
                Eigen::LLT<rmat> ls(ms), lz(mz);
                if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
                    return false;
                const rmat lsm = ls.matrixL();
                const rmat lzm = lz.matrixL();
                Eigen::JacobiSVD<rmat> svd(lzm.transpose() * lsm,
                                           Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
                const rvec sig = svd.singularValues();
                if (sig.minCoeff() <= 0.0)
                    return false;
                const rvec sighalf = sig.cwiseSqrt();
                // R = L_s V Sigma^{-1/2};  R^{-1} = Sigma^{1/2} V' L_s^{-1}
                psd_r_[i] = lsm * svd.matrixV() * sighalf.cwiseInverse().asDiagonal();
                rmat lsinv = rmat::Identity(blk.side, blk.side);
                lsm.triangularView<Eigen::Lower>().solveInPlace(lsinv);
                psd_rinv_[i] = sighalf.asDiagonal() * svd.matrixV().transpose() * lsinv;
                psd_what_[i] = psd_r_[i] * psd_r_[i].transpose();
                psd_sigma_[i] = sig;
                lambda_.segment(blk.offset, blk.dim) =
                    svec(rmat(sig.asDiagonal()));
                break;
            }
            default:
                break;
            }
        }
        return true;
    }

    const rvec &lambda() const { return lambda_; }

    /// W' W v  (appears in the reduced KKT system).
    rvec apply_wtw(const rvec &v) const {
        rvec out(d_.m);
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            out.segment(blk.offset, blk.dim) = apply_wtw_local(
                static_cast<int>(i), v.segment(blk.offset, blk.dim));
        }
        return out;
    }

    /// W' W restricted to one block (local coordinates).
    rvec apply_wtw_local(int i, const rvec &vs) const {
        const auto &blk = d_.cones[i];
        switch (blk.type) {
        case ConeType::NonNeg:
            return vs.cwiseProduct(nn_w_[i].cwiseAbs2());
        case ConeType::SecondOrder:
            return soc_w_[i] * (soc_w_[i] * vs);
        case ConeType::Psd:
            return svec(psd_what_[i] * smat(vs, blk.side) * psd_what_[i]);
        default:
            return vs;
        }
    }

    /// W v (scaled dual direction).
    rvec apply_w(const rvec &v) const {
        rvec out(d_.m);
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto vs = v.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                out.segment(blk.offset, blk.dim) = vs.cwiseProduct(nn_w_[i]);
                break;
            case ConeType::SecondOrder:
                out.segment(blk.offset, blk.dim) = soc_w_[i] * vs;
                break;
            case ConeType::Psd:
                out.segment(blk.offset, blk.dim) =
                    svec(psd_r_[i].transpose() * smat(vs, blk.side) * psd_r_[i]);
                break;
            default:
                break;
            }
        }
        return out;
    }

    /// W' v.
    rvec apply_wt(const rvec &v) const {
        rvec out(d_.m);
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto vs = v.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                out.segment(blk.offset, blk.dim) = vs.cwiseProduct(nn_w_[i]);
                break;
            case ConeType::SecondOrder:
                out.segment(blk.offset, blk.dim) = soc_w_[i] * vs; // symmetric
                break;
            case ConeType::Psd:
                out.segment(blk.offset, blk.dim) =
                    svec(psd_r_[i] * smat(vs, blk.side) * psd_r_[i].transpose());
                break;
            default:
                break;
            }
        }
        return out;
    }

    /// W^{-T} v (scaled primal direction).
    rvec apply_winvt(const rvec &v) const {
        rvec out(d_.m);
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto vs = v.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                out.segment(blk.offset, blk.dim) =
                    vs.cwiseQuotient(nn_w_[i]);
                break;
            case ConeType::SecondOrder:
                out.segment(blk.offset, blk.dim) = soc_winv_[i] * vs;
                break;
            case ConeType::Psd:
                out.segment(blk.offset, blk.dim) =
                    svec(psd_rinv_[i] * smat(vs, blk.side) *
                         psd_rinv_[i].transpose());
                break;
            default:
                break;
            }
        }
        return out;
    }

    /// lambda \ d (Jordan division by the scaling point).
    rvec lambda_div(const rvec &dv) const {
        rvec out(d_.m);
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto ds = dv.segment(blk.offset, blk.dim);
            const auto ls = lambda_.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                out.segment(blk.offset, blk.dim) = ds.cwiseQuotient(ls);
                break;
            case ConeType::SecondOrder: {
                const int q = blk.dim;
                const double det =
                    ls(0) * ls(0) - ls.tail(q - 1).squaredNorm();
                rvec r(q);
                r(0) = (ls(0) * ds(0) - ls.tail(q - 1).dot(ds.tail(q - 1))) /
                       det;
                r.tail(q - 1) =
                    (ds.tail(q - 1) - r(0) * ls.tail(q - 1)) / ls(0);
                out.segment(blk.offset, blk.dim) = r;
                break;
            }
            case ConeType::Psd: {
                const rvec &sig = psd_sigma_[i];
                rmat md = smat(ds, blk.side);
                for (int r = 0; r < blk.side; ++r)
                    for (int cidx = 0; cidx < blk.side; ++cidx)
                        md(r, cidx) *= 2.0 / (sig(r) + sig(cidx));
                out.segment(blk.offset, blk.dim) = svec(md);
                break;
            }
            default:
                break;
            }
        }
        return out;
    }

    /// Largest alpha with lambda + alpha * dir in K (dir in scaled space).
    double max_step(const rvec &dir) const {
        double amax = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d_.cones.size(); ++i) {
            const auto &blk = d_.cones[i];
            const auto ds = dir.segment(blk.offset, blk.dim);
            const auto ls = lambda_.segment(blk.offset, blk.dim);
            switch (blk.type) {
            case ConeType::NonNeg:
                for (int k = 0; k < blk.dim; ++k)
                    if (ds(k) < 0.0)
                        amax = std::min(amax, -ls(k) / ds(k));
                break;
            case ConeType::SecondOrder: {
                const int q = blk.dim;
                const double a =
                    ds(0) * ds(0) - ds.tail(q - 1).squaredNorm();
                const double bq =
                    ls(0) * ds(0) - ls.tail(q - 1).dot(ds.tail(q - 1));
                const double c0 =
                    ls(0) * ls(0) - ls.tail(q - 1).squaredNorm();
                amax = std::min(amax, soc_root(a, bq, c0));
                break;
            }
            case ConeType::Psd: {
                const rvec &sig = psd_sigma_[i];
                rmat md = smat(ds, blk.side);
                const rvec inv_half = sig.cwiseSqrt().cwiseInverse();
                md = inv_half.asDiagonal() * md * inv_half.asDiagonal();
                Eigen::SelfAdjointEigenSolver<rmat> eig(md);
                const double nu = eig.eigenvalues().minCoeff();
                if (nu < 0.0)
                    amax = std::min(amax, -1.0 / nu);
                break;
            }
            default:
                break;
            }
        }
        return amax;
    }

  private:
    // smallest positive root of a t^2 + 2 b t + c0 = 0 (c0 > 0), inf if none
    static double soc_root(double a, double b, double c0) {
        const double inf = std::numeric_limits<double>::infinity();
        if (std::abs(a) < 1e-300)
            return b < 0.0 ? -c0 / (2.0 * b) : inf;
        const double disc = b * b - a * c0;
        if (disc < 0.0)
            return inf;
        const double sq = std::sqrt(disc);
        const double r1 = (-b - sq) / a;
        const double r2 = (-b + sq) / a;
        double best = inf;
        if (r1 > 0.0)
            best = std::min(best, r1);
        if (r2 > 0.0)
            best = std::min(best, r2);
        return best;
    }

    const SolverData &d_;
    std::vector<rvec> nn_w_, nn_lam_;
    std::vector<rmat> soc_w_, soc_winv_;
    std::vector<rmat> psd_r_, psd_rinv_, psd_what_;
    std::vector<rvec> psd_sigma_;
    rvec lambda_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

class Solver {
  public:
    Solver(const ConicProgram &prog, const SolverSettings &settings)
        : settings_(settings) {
        prog.check_well_formed();
        build(prog);
    }

    ConicSolution run() {
        const auto t0 = std::chrono::steady_clock::now();
        ConicSolution sol = iterate();
        sol.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        return sol;
    }

  private:
    using SD = detail::SolverData;

    void build(const ConicProgram &prog) {
        d_.n = prog.num_vars();
        d_.col_scale = rvec::Ones(d_.n);

        // classify variables; zero blocks become free vars pinned later
        std::vector<int> zero_vars;
        int cpos = 0;
        for (const auto &blk : prog.blocks()) {
            switch (blk.type) {
            case ConeType::Free:
                for (int i = 0; i < blk.dim; ++i)
                    d_.free_var.push_back(blk.offset + i);
                break;
            case ConeType::Zero:
                for (int i = 0; i < blk.dim; ++i) {
                    d_.free_var.push_back(blk.offset + i);
                    zero_vars.push_back(blk.offset + i);
                }
                break;
            default: {
                ConeBlock cb = blk;
                cb.offset = cpos; // offset re-based into cone space
                d_.cones.push_back(cb);
                for (int i = 0; i < blk.dim; ++i)
                    d_.cone_var.push_back(blk.offset + i);
                cpos += blk.dim;
                switch (blk.type) {
                case ConeType::NonNeg:
                    d_.degree += blk.dim;
                    break;
                case ConeType::SecondOrder:
                    d_.degree += 1;
                    break;
                case ConeType::Psd:
                    d_.degree += blk.side;
                    break;
                default:
                    break;
                }
                break;
            }
            }
        }
        d_.m = cpos;
        d_.nf = static_cast<int>(d_.free_var.size());

        // variable index -> (is_cone, position)
        cone_pos_of_var_.assign(d_.n, -1);
        free_pos_of_var_.assign(d_.n, -1);
        for (int i = 0; i < d_.m; ++i)
            cone_pos_of_var_[d_.cone_var[i]] = i;
        for (int i = 0; i < d_.nf; ++i)
            free_pos_of_var_[d_.free_var[i]] = i;

        // assemble rows (original equalities plus zero pins)
        d_.p = prog.num_equalities() + static_cast<int>(zero_vars.size());
        std::vector<std::vector<std::pair<int, double>>> rows(d_.p);
        const auto &tr = prog.triplet_rows();
        const auto &tc = prog.triplet_cols();
        const auto &tv = prog.triplet_vals();
        for (std::size_t t = 0; t < tr.size(); ++t)
            rows[tr[t]].push_back({tc[t], tv[t]});
        d_.b = rvec::Zero(d_.p);
        for (int r = 0; r < prog.num_equalities(); ++r)
            d_.b(r) = prog.rhs()[r];
        for (std::size_t i = 0; i < zero_vars.size(); ++i)
            rows[prog.num_equalities() + static_cast<int>(i)].push_back(
                {zero_vars[i], 1.0});

        d_.c = rvec::Zero(d_.n);
        for (const auto &t : prog.objective().terms)
            d_.c(t.index) += t.value;
        obj_constant_ = prog.objective_constant();

        // column-group equilibration (Ruiz) + rhs/objective scaling
        d_.row_scale = rvec::Ones(d_.p);
        if (settings_.equilibrate)
            equilibrate(rows, prog);

        // split rows into free / cone-block structure
        d_.row_free.resize(d_.p);
        d_.row_cone.resize(d_.p);
        for (int r = 0; r < d_.p; ++r) {
            std::vector<std::vector<std::pair<int, double>>> per_block(
                d_.cones.size());
            for (const auto &[var, val] : rows[r]) {
                const double v = val * d_.row_scale(r) * d_.col_scale(var);
                if (free_pos_of_var_[var] >= 0) {
                    d_.row_free[r].push_back({free_pos_of_var_[var], v});
                } else {
                    const int cp = cone_pos_of_var_[var];
                    const int blk = block_of_cone_pos(cp);
                    per_block[blk].push_back({cp - d_.cones[blk].offset, v});
                }
            }
            for (std::size_t bIdx = 0; bIdx < per_block.size(); ++bIdx)
                if (!per_block[bIdx].empty())
                    d_.row_cone[r].push_back(
                        {static_cast<int>(bIdx), std::move(per_block[bIdx])});
        }
        for (int r = 0; r < d_.p; ++r)
            d_.b(r) *= d_.row_scale(r) * d_.b_scale;
        for (int v = 0; v < d_.n; ++v)
            d_.c(v) *= d_.col_scale(v) * d_.c_scale;
    }

    int block_of_cone_pos(int cp) const {
        int lo = 0, hi = static_cast<int>(d_.cones.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (d_.cones[mid].offset <= cp)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    void equilibrate(std::vector<std::vector<std::pair<int, double>>> &rows,
                     const ConicProgram &prog) {
        // one scale per free/nonneg scalar, one shared scale per SOC/PSD block
        std::vector<int> group_of(d_.n);
        int ngroups = 0;
        for (const auto &blk : prog.blocks()) {
            const bool shared = blk.type == ConeType::SecondOrder ||
                                blk.type == ConeType::Psd;
            if (shared) {
                for (int i = 0; i < blk.dim; ++i)
                    group_of[blk.offset + i] = ngroups;
                ++ngroups;
            } else {
                for (int i = 0; i < blk.dim; ++i)
                    group_of[blk.offset + i] = ngroups++;
            }
        }
        rvec gscale = rvec::Ones(ngroups);
        for (int pass = 0; pass < 8; ++pass) {
            rvec rmax = rvec::Zero(d_.p);
            for (int r = 0; r < d_.p; ++r)
                for (const auto &[var, val] : rows[r])
                    rmax(r) = std::max(rmax(r),
                                       std::abs(val) * d_.row_scale(r) *
                                           gscale(group_of[var]));
            for (int r = 0; r < d_.p; ++r)
                if (rmax(r) > 0.0)
                    d_.row_scale(r) /= std::sqrt(rmax(r));
            rvec cmax = rvec::Zero(ngroups);
            for (int r = 0; r < d_.p; ++r)
                for (const auto &[var, val] : rows[r])
                    cmax(group_of[var]) =
                        std::max(cmax(group_of[var]),
                                 std::abs(val) * d_.row_scale(r) *
                                     gscale(group_of[var]));
            for (int g = 0; g < ngroups; ++g)
                if (cmax(g) > 0.0)
                    gscale(g) /= std::sqrt(cmax(g));
        }
        const auto clamp = [](double v) {
            return std::clamp(v, 1e-8, 1e8);
        };
        for (int g = 0; g < ngroups; ++g)
            gscale(g) = clamp(gscale(g));
        for (int r = 0; r < d_.p; ++r)
            d_.row_scale(r) = clamp(d_.row_scale(r));
        for (int v = 0; v < d_.n; ++v)
            d_.col_scale(v) = gscale(group_of[v]);

        double bmax = 0.0, cmaxv = 0.0;
        for (int r = 0; r < d_.p; ++r)
            bmax = std::max(bmax, std::abs(d_.b(r)) * d_.row_scale(r));
        for (int v = 0; v < d_.n; ++v)
            cmaxv = std::max(cmaxv, std::abs(d_.c(v)) * d_.col_scale(v));
        d_.b_scale = 1.0 / std::max(1.0, bmax);
        d_.c_scale = 1.0 / std::max(1.0, cmaxv);
    }

    // -- matrix-vector products with the scaled A ---------------------------

    void apply_a(const rvec &xf, const rvec &xc, rvec &out) const {
        out.setZero();
        for (int r = 0; r < d_.p; ++r) {
            double acc = 0.0;
            for (const auto &[fp, v] : d_.row_free[r])
                acc += v * xf(fp);
            for (const auto &rb : d_.row_cone[r]) {
                const int off = d_.cones[rb.block].offset;
                for (const auto &[li, v] : rb.nz)
                    acc += v * xc(off + li);
            }
            out(r) = acc;
        }
    }

    void apply_at(const rvec &y, rvec &out_f, rvec &out_c) const {
        out_f.setZero();
        out_c.setZero();
        for (int r = 0; r < d_.p; ++r) {
            const double yr = y(r);
            if (yr == 0.0)
                continue;
            for (const auto &[fp, v] : d_.row_free[r])
                out_f(fp) += v * yr;
            for (const auto &rb : d_.row_cone[r]) {
                const int off = d_.cones[rb.block].offset;
                for (const auto &[li, v] : rb.nz)
                    out_c(off + li) += v * yr;
            }
        }
    }

    // -- KKT assembly and solve ----------------------------------------------

    /// Builds and factorizes the saddle matrix [[0, Af'], [Af, -S]] with
    /// S = A_c W'W A_c'.
    void factor(const detail::Scaling &w) {
        const int dim = d_.nf + d_.p;
        saddle_ = rmat::Zero(dim, dim);
        for (int r = 0; r < d_.p; ++r)
            for (const auto &[fp, v] : d_.row_free[r]) {
                saddle_(fp, d_.nf + r) = v;
                saddle_(d_.nf + r, fp) = v;
            }
        // S row by row: t_r = W'W a_r (block-supported), S(r,q) = a_q . t_r
        scratch_t_.assign(d_.p, {});
        for (int r = 0; r < d_.p; ++r) {
            auto &tr = scratch_t_[r];
            for (const auto &rb : d_.row_cone[r]) {
                const auto &blk = d_.cones[rb.block];
                rvec a_loc = rvec::Zero(blk.dim);
                for (const auto &[li, v] : rb.nz)
                    a_loc(li) = v;
                tr.push_back({rb.block, w.apply_wtw_local(rb.block, a_loc)});
            }
        }
        for (int r = 0; r < d_.p; ++r) {
            for (int q = r; q < d_.p; ++q) {
                double acc = 0.0;
                for (const auto &[blk_r, t_loc] : scratch_t_[r]) {
                    for (const auto &rb_q : d_.row_cone[q]) {
                        if (rb_q.block != blk_r)
                            continue;
                        for (const auto &[li, v] : rb_q.nz)
                            acc += v * t_loc(li);
                    }
                }
                saddle_(d_.nf + r, d_.nf + q) -= acc;
                if (q != r)
                    saddle_(d_.nf + q, d_.nf + r) -= acc;
            }
        }
        saddle_exact_ = saddle_;
        const double reg = settings_.static_reg *
                           std::max(1.0, saddle_.cwiseAbs().maxCoeff());
        for (int i = 0; i < d_.nf; ++i)
            saddle_(i, i) += reg;
        for (int i = d_.nf; i < dim; ++i)
            saddle_(i, i) -= reg;
        lu_.compute(saddle_);
    }

    /// Solves the 3x3 scaled KKT system
    ///   [0 A' G'; A 0 0; G 0 -W'W] (ux, uy, uz) = (rx, ry, rz).
    void solve3(const detail::Scaling &w, const rvec &rx, const rvec &ry,
                const rvec &rz, rvec &ux_f, rvec &ux_c, rvec &uy,
                rvec &uz) const {
        rvec rx_f(d_.nf), rx_c(d_.m);
        for (int i = 0; i < d_.nf; ++i)
            rx_f(i) = rx(d_.free_var[i]);
        for (int i = 0; i < d_.m; ++i)
            rx_c(i) = rx(d_.cone_var[i]);

        const rvec wtw_rxc = w.apply_wtw(rx_c);
        rvec rhs(d_.nf + d_.p);
        rhs.head(d_.nf) = rx_f;
        rvec tmp(d_.p);
        // ry + A_c rz - A_c W'W rx_c
        for (int r = 0; r < d_.p; ++r) {
            double acc = ry(r);
            for (const auto &rb : d_.row_cone[r]) {
                const int off = d_.cones[rb.block].offset;
                for (const auto &[li, v] : rb.nz)
                    acc += v * (rz(off + li) - wtw_rxc(off + li));
            }
            tmp(r) = acc;
        }
        rhs.tail(d_.p) = tmp;

        rvec sol = lu_.solve(rhs);
        // one refinement pass against the unregularized matrix
        for (int it = 0; it < 2; ++it) {
            rvec res = rhs - saddle_exact_ * sol;
            if (res.lpNorm<Eigen::Infinity>() <
                1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
                break;
            sol += lu_.solve(res);
        }

        ux_f = sol.head(d_.nf);
        uy = sol.tail(d_.p);

        // uz = A_c' uy - rx_c ; ux_c = -rz - W'W uz
        uz = -rx_c;
        for (int r = 0; r < d_.p; ++r) {
            const double yr = uy(r);
            if (yr == 0.0)
                continue;
            for (const auto &rb : d_.row_cone[r]) {
                const int off = d_.cones[rb.block].offset;
                for (const auto &[li, v] : rb.nz)
                    uz(off + li) += v * yr;
            }
        }
        ux_c = -rz - w.apply_wtw(uz);
    }

    // -- main loop -------------------------------------------------------------

    ConicSolution iterate() {
        const double tol = settings_.tolerance;
        detail::BlockOps ops(d_);
        detail::Scaling w(d_);

        rvec xf = rvec::Zero(d_.nf), xc = rvec::Zero(d_.m);
        rvec y = rvec::Zero(d_.p);
        rvec s = ops.identity_e(), z = ops.identity_e();
        double tau = 1.0, kappa = 1.0;

        const rvec e = ops.identity_e();
        const double normb = std::max(1.0, d_.b.norm());
        const double normc = std::max(1.0, d_.c.norm());

        rvec c_f(d_.nf), c_c(d_.m);
        for (int i = 0; i < d_.nf; ++i)
            c_f(i) = d_.c(d_.free_var[i]);
        for (int i = 0; i < d_.m; ++i)
            c_c(i) = d_.c(d_.cone_var[i]);

        // -- initialization: W = I least-squares points, shifted interior
        w.set_identity();
        factor(w);
        {
            rvec ux_f, ux_c, uy, uz;
            rvec zr = rvec::Zero(d_.n);
            solve3(w, zr, d_.b, rvec::Zero(d_.m), ux_f, ux_c, uy, uz);
            xf = ux_f;
            xc = ux_c;
            s = -uz;
            const double shift_s = ops.min_eig(s);
            if (shift_s <= 0.0)
                s += (1.0 - shift_s) * e;

            rvec rc = -d_.c;
            solve3(w, rc, rvec::Zero(d_.p), rvec::Zero(d_.m), ux_f, ux_c, uy,
                   uz);
            y = uy;
            z = uz;
            const double shift_z = ops.min_eig(z);
            if (shift_z <= 0.0)
                z += (1.0 - shift_z) * e;
        }

        ConicSolution best;
        double best_score = std::numeric_limits<double>::infinity();
        int stalls = 0;

        for (int iter = 0; iter <= settings_.max_iterations; ++iter) {
            // residuals
            rvec at_y_f(d_.nf), at_y_c(d_.m);
            apply_at(y, at_y_f, at_y_c);
            rvec res_x_f = at_y_f + c_f * tau;
            rvec res_x_c = at_y_c - z + c_c * tau;
            rvec ax(d_.p);
            apply_a(xf, xc, ax);
            rvec res_y = -ax + d_.b * tau;
            rvec res_z = xc - s;
            const double cx = c_f.dot(xf) + c_c.dot(xc);
            const double by = d_.b.dot(y);
            const double res_tau = -cx - by - kappa;

            const double pcost = cx / tau;
            const double gap_abs = (s.dot(z) + tau * kappa) / (tau * tau);
            const double szgap = s.dot(z) / (tau * tau);
            const double pres =
                std::max(res_y.norm() / normb, res_z.norm() / 1.0) / tau;
            const double dres =
                std::sqrt(res_x_f.squaredNorm() + res_x_c.squaredNorm()) /
                normc / tau;

            const double score =
                std::max({pres, dres, szgap / std::max(1.0, std::abs(pcost))});
            if (score < best_score) {
                best_score = score;
                best = snapshot(xf, xc, y, z, s, tau, SolveStatus::Optimal);
                best.iterations = iter;
                best.gap_abs = szgap;
            }

            if (pres <= tol && dres <= tol &&
                szgap <= tol * std::max(1.0, std::abs(pcost))) {
                ConicSolution sol =
                    snapshot(xf, xc, y, z, s, tau, SolveStatus::Optimal);
                sol.iterations = iter;
                return sol;
            }

            // infeasibility certificates
            const double denom = -by; // h = 0
            if (denom > 0.0) {
                const double pinf =
                    std::sqrt(at_y_f.squaredNorm() +
                              (at_y_c - z).squaredNorm()) /
                    normc / denom;
                if (pinf <= tol) {
                    ConicSolution sol = snapshot(xf, xc, y, z, s, tau,
                                                 SolveStatus::PrimalInfeasible);
                    sol.iterations = iter;
                    return sol;
                }
            }
            if (-cx > 0.0) {
                const double dinf =
                    std::max(ax.norm() / normb, (xc - s).norm()) / (-cx);
                if (dinf <= tol) {
                    ConicSolution sol = snapshot(xf, xc, y, z, s, tau,
                                                 SolveStatus::DualInfeasible);
                    sol.iterations = iter;
                    return sol;
                }
            }

            if (iter == settings_.max_iterations)
                break;

            // NT scaling
            if (!w.compute(s, z)) {
                best.status = SolveStatus::SlowProgress;
                return best;
            }
            const rvec &lam = w.lambda();
            const double mu = (s.dot(z) + tau * kappa) / (d_.degree + 1.0);
            factor(w);

            // constant-column solve (reused by both steps)
            rvec x1f, x1c, y1, z1;
            solve3(w, -d_.c, d_.b, rvec::Zero(d_.m), x1f, x1c, y1, z1);
            const double den_tau =
                kappa / tau - (c_f.dot(x1f) + c_c.dot(x1c)) - d_.b.dot(y1);

            const auto newton = [&](const rvec &bx, const rvec &by_v,
                                    const rvec &bz, double btau,
                                    const rvec &bs, double bkappa, rvec &dxf,
                                    rvec &dxc, rvec &dy, rvec &dz, rvec &ds,
                                    double &dtau, double &dkappa) {
                const rvec dtil = w.lambda_div(bs);
                const rvec wt_dtil = w.apply_wt(dtil);
                rvec x0f, x0c, y0, z0;
                solve3(w, bx, -by_v, -bz - wt_dtil, x0f, x0c, y0, z0);
                const double num = btau + bkappa / tau +
                                   (c_f.dot(x0f) + c_c.dot(x0c)) +
                                   d_.b.dot(y0);
                dtau = num / den_tau;
                dxf = x0f + dtau * x1f;
                dxc = x0c + dtau * x1c;
                dy = y0 + dtau * y1;
                dz = z0 + dtau * z1;
                ds = wt_dtil - w.apply_wtw(dz);
                dkappa = (bkappa - kappa * dtau) / tau;
            };

            // affine step
            rvec dxf, dxc, dy, dz, ds;
            double dtau, dkappa;
            const rvec lam2 = ops.jprod(lam, lam);
            newton(-res_x_cat(res_x_f, res_x_c), -res_y, -res_z, -res_tau,
                   -lam2, -tau * kappa, dxf, dxc, dy, dz, ds, dtau, dkappa);

            rvec ds_scaled = w.apply_winvt(ds);
            rvec dz_scaled = w.apply_w(dz);
            double alpha = std::min(
                {1.0, w.max_step(ds_scaled), w.max_step(dz_scaled),
                 dtau < 0.0 ? -tau / dtau
                            : std::numeric_limits<double>::infinity(),
                 dkappa < 0.0 ? -kappa / dkappa
                              : std::numeric_limits<double>::infinity()});
            const double sigma =
                std::pow(1.0 - std::min(1.0, alpha), 3.0);

            // combined step
            rvec bs = -lam2 - ops.jprod(ds_scaled, dz_scaled) +
                      sigma * mu * e;
            const double bkappa = -tau * kappa - dtau * dkappa + sigma * mu;
            newton(-(1.0 - sigma) * res_x_cat(res_x_f, res_x_c),
                   -(1.0 - sigma) * res_y, -(1.0 - sigma) * res_z,
                   -(1.0 - sigma) * res_tau, bs, bkappa, dxf, dxc, dy, dz, ds,
                   dtau, dkappa);

            ds_scaled = w.apply_winvt(ds);
            dz_scaled = w.apply_w(dz);
            const double amax = std::min(
                {w.max_step(ds_scaled), w.max_step(dz_scaled),
                 dtau < 0.0 ? -tau / dtau
                            : std::numeric_limits<double>::infinity(),
                 dkappa < 0.0 ? -kappa / dkappa
                              : std::numeric_limits<double>::infinity()});
            alpha = std::min(1.0, 0.99 * amax);

            if (alpha < 1e-5) {
                if (++stalls >= 3) {
                    best.status = SolveStatus::SlowProgress;
                    return best;
                }
            } else {
                stalls = 0;
            }

            xf += alpha * dxf;
            xc += alpha * dxc;
            y += alpha * dy;
            z += alpha * dz;
            s += alpha * ds;
            tau += alpha * dtau;
            kappa += alpha * dkappa;
        }

        best.status = SolveStatus::IterationLimit;
        best.iterations = settings_.max_iterations;
        return best;
    }

    rvec res_x_cat(const rvec &f, const rvec &c) const {
        rvec out(d_.n);
        for (int i = 0; i < d_.nf; ++i)
            out(d_.free_var[i]) = f(i);
        for (int i = 0; i < d_.m; ++i)
            out(d_.cone_var[i]) = c(i);
        return out;
    }

    /// Deflates by tau, undoes the equilibration and fills the report.
    ConicSolution snapshot(const rvec &xf, const rvec &xc, const rvec &y,
                           const rvec &z, const rvec &s, double tau,
                           SolveStatus status) const {
        (void)s;
        ConicSolution sol;
        sol.status = status;
        sol.x = rvec::Zero(d_.n);
        sol.z = rvec::Zero(d_.n);
        for (int i = 0; i < d_.nf; ++i)
            sol.x(d_.free_var[i]) = xf(i) / tau;
        for (int i = 0; i < d_.m; ++i) {
            sol.x(d_.cone_var[i]) = xc(i) / tau;
            sol.z(d_.cone_var[i]) = z(i) / tau;
        }
        sol.y = -y / tau; // conventional sign: A' y + z = c

        // undo scaling: x = D x_tilde / b_scale ; y = E y_tilde / c_scale
        for (int v = 0; v < d_.n; ++v) {
            sol.x(v) *= d_.col_scale(v) / d_.b_scale;
            sol.z(v) *= 1.0 / (d_.col_scale(v) * d_.c_scale);
        }
        for (int r = 0; r < d_.p; ++r)
            sol.y(r) *= d_.row_scale(r) / d_.c_scale;

        // report residuals in the original problem data
        const rvec &zt = sol.z;
        double cx = obj_constant_;
        rvec axb = rvec::Zero(d_.p);
        rvec aty = rvec::Zero(d_.n);
        for (int r = 0; r < d_.p; ++r)
            axb(r) = -d_.b(r) / (d_.row_scale(r) * d_.b_scale);
        for (int r = 0; r < d_.p; ++r) {
            for (const auto &[fp, v] : d_.row_free[r]) {
                const int var = d_.free_var[fp];
                const double a0 = v / (d_.row_scale(r) * d_.col_scale(var));
                axb(r) += a0 * sol.x(var);
                aty(var) += a0 * sol.y(r);
            }
            for (const auto &rb : d_.row_cone[r]) {
                const int off = d_.cones[rb.block].offset;
                for (const auto &[li, v] : rb.nz) {
                    const int var = d_.cone_var[off + li];
                    const double a0 =
                        v / (d_.row_scale(r) * d_.col_scale(var));
                    axb(r) += a0 * sol.x(var);
                    aty(var) += a0 * sol.y(r);
                }
            }
        }
        double b0norm = 0.0, c0norm = 0.0;
        rvec c0 = rvec::Zero(d_.n);
        for (int v = 0; v < d_.n; ++v) {
            c0(v) = d_.c(v) / (d_.col_scale(v) * d_.c_scale);
            c0norm = std::max(c0norm, std::abs(c0(v)));
            cx += c0(v) * sol.x(v);
        }
        for (int r = 0; r < d_.p; ++r)
            b0norm = std::max(
                b0norm, std::abs(d_.b(r) / (d_.row_scale(r) * d_.b_scale)));

        sol.objective = cx;
        sol.primal_res = axb.norm() / std::max(1.0, b0norm);
        sol.dual_res = (aty + zt - c0).norm() / std::max(1.0, c0norm);
        double gap = 0.0;
        for (int i = 0; i < d_.m; ++i)
            gap += sol.x(d_.cone_var[i]) * sol.z(d_.cone_var[i]);
        sol.gap_abs = std::abs(gap);
        sol.gap_rel = sol.gap_abs / std::max(1.0, std::abs(cx));
        return sol;
    }

    SolverSettings settings_;
    SD d_;
    double obj_constant_ = 0.0;
    std::vector<int> cone_pos_of_var_, free_pos_of_var_;
    rmat saddle_, saddle_exact_;
    Eigen::PartialPivLU<rmat> lu_;
    mutable std::vector<std::vector<std::pair<int, rvec>>> scratch_t_;
};

/// Solves a conic program with the embedded interior-point backend.  The
/// RISBEAM_CONIC_BACKEND environment variable selects the backend; only
/// "embedded" is available in this build.
inline ConicSolution solve(const ConicProgram &prog,
                           const SolverSettings &settings = {}) {
    if (const char *backend = std::getenv("RISBEAM_CONIC_BACKEND")) {
        const std::string b(backend);
        if (!b.empty() && b != "embedded")
            throw SolverError("unknown conic backend: " + b);
    }
    if (!(settings.tolerance > 0.0))
        throw SolverError("solver tolerance must be positive");
    Solver solver(prog, settings);
    return solver.run();
}

} // namespace risbeam::conic

#endif // RISBEAM_CONIC_SOLVER_HPP

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

#include "risbeam/conic/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace risbeam;
using namespace risbeam::conic;

namespace {

cmat random_hermitian(int n, Rng &rng) {
    cmat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = rng.cnormal();
    return hermitize(a);
}

} // namespace

TEST_CASE("svec: trace inner product and round trip") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int q = 2 + static_cast<int>(rng.next_u64() % 6);
        rmat a(q, q), b(q, q);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) {
                a(i, j) = rng.normal();
                b(i, j) = rng.normal();
            }
        a = symmetrize(a);
        b = symmetrize(b);
        CHECK(svec(a).dot(svec(b)) ==
              Catch::Approx((a * b).trace()).margin(1e-12));
        CHECK((smat(svec(a), q) - a).norm() < 1e-14);
    }
}

TEST_CASE("hermitian embed: identity maps to identity") {
    const cmat h = cmat::Identity(4, 4);
    CHECK((hermitian_embed(h) - rmat::Identity(8, 8)).norm() == 0.0);
}

TEST_CASE("hermitian embed: eigenvalues doubled") {
    Rng rng(5);
    const cmat h = random_hermitian(5, rng);
    Eigen::SelfAdjointEigenSolver<cmat> ec(h);
    Eigen::SelfAdjointEigenSolver<rmat> er(hermitian_embed(h));
    const rvec ev_c = ec.eigenvalues();
    const rvec ev_r = er.eigenvalues();
    for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(ev_r(2 * i) - ev_c(i)) < 1e-10);
        CHECK(std::abs(ev_r(2 * i + 1) - ev_c(i)) < 1e-10);
    }
}

TEST_CASE("hermitian embed: trace identity on random pairs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 4);
        const cmat a = random_hermitian(n, rng);
        const cmat b = random_hermitian(n, rng);
        const double lhs = (hermitian_embed(a) * hermitian_embed(b)).trace();
        const double rhs = 2.0 * std::real((a * b).trace());
        CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("hermitian embed: rejects non-Hermitian input") {
    cmat h(2, 2);
    h << cplx(1, 0), cplx(2, 1), cplx(5, 3), cplx(4, 0);
    CHECK_THROWS_AS(hermitian_embed(h), std::invalid_argument);
}

TEST_CASE("hermitian extract: inverse of embed") {
    Rng rng(9);
    const cmat h = random_hermitian(4, rng);
    CHECK((hermitian_extract(hermitian_embed(h)) - h).norm() < 1e-13);
}

TEST_CASE("solver: rejects unknown backend") {
    setenv("RISBEAM_CONIC_BACKEND", "external-nope", 1);
    ConicProgram prog;
    prog.add_nonneg(1);
    prog.add_objective_term(0, 1.0);
    prog.add_equality(LinExpr{}.add(0, 1.0), 1.0);
    CHECK_THROWS_AS(conic::solve(prog), SolverError);
    setenv("RISBEAM_CONIC_BACKEND", "embedded", 1);
    CHECK_NOTHROW(conic::solve(prog));
    unsetenv("RISBEAM_CONIC_BACKEND");
}

TEST_CASE("solver: scalar LP bound") {
    ConicProgram prog;
    const int x = prog.add_free(1, "x");
    prog.add_objective_term(x, 1.0);
    prog.add_inequality_le(LinExpr{}.add(x, -1.0), -3.0); // x >= 3
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == Catch::Approx(3.0).margin(1e-6));
    CHECK(sol.segment(prog, "x")(0) == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("solver: second-order cone projection of a fixed point") {
    ConicProgram prog;
    const int x = prog.add_free(3, "x");
    const int t = prog.add_free(1, "t");
    prog.add_objective_term(t, 1.0);
    rvec x0(3);
    x0 << 1.0, -2.0, 0.5;
    std::vector<LinExpr> diff;
    for (int i = 0; i < 3; ++i) {
        LinExpr e;
        e.add(x + i, 1.0);
        e.constant = -x0(i);
        diff.push_back(e);
    }
    prog.add_soc_norm_le(diff, LinExpr{}.add(t, 1.0));
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.objective) < 1e-6);
    CHECK((sol.segment(prog, "x") - x0).norm() < 1e-5);
}

TEST_CASE("solver: quadratic epigraph with constant argument") {
    ConicProgram prog;
    const int u = prog.add_free(1, "u");
    prog.add_objective_term(u, 1.0);
    std::vector<LinExpr> v{LinExpr(2.0), LinExpr(-1.5)}; // constants
    prog.add_soc_quad_le(v, LinExpr{}.add(u, 1.0));
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == Catch::Approx(4.0 + 2.25).margin(1e-6));
}

TEST_CASE("solver: least squares through a second-order cone") {
    Rng rng(11);
    rmat a(5, 3);
    rvec b(5);
    for (int i = 0; i < 5; ++i) {
        b(i) = rng.normal();
        for (int j = 0; j < 3; ++j)
            a(i, j) = rng.normal();
    }
    ConicProgram prog;
    const int x = prog.add_free(3, "x");
    const int t = prog.add_free(1, "t");
    prog.add_objective_term(t, 1.0);
    std::vector<LinExpr> rows;
    for (int i = 0; i < 5; ++i) {
        LinExpr e;
        for (int j = 0; j < 3; ++j)
            e.add(x + j, a(i, j));
        e.constant = -b(i);
        rows.push_back(e);
    }
    prog.add_soc_norm_le(rows, LinExpr{}.add(t, 1.0));
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const rvec x_ls = a.colPivHouseholderQr().solve(b);
    CHECK(sol.objective == Catch::Approx((a * x_ls - b).norm()).margin(1e-6));
    CHECK((sol.segment(prog, "x") - x_ls).norm() < 1e-4);
}

TEST_CASE("solver: top eigenvalue SDP with complex data") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 3 + static_cast<int>(rng.next_u64() % 3);
        cmat c = random_hermitian(n, rng);
        Eigen::SelfAdjointEigenSolver<cmat> eig(c);
        const double lmax = eig.eigenvalues().maxCoeff();
        if (lmax <= 0.0)
            c += (1.0 - lmax) * cmat::Identity(n, n);
        Eigen::SelfAdjointEigenSolver<cmat> eig2(c);
        const double oracle = eig2.eigenvalues().maxCoeff();

        ConicProgram prog;
        const int w = prog.add_psd(2 * n, "W");
        LinExpr obj;
        prog.psd_coeff(obj, w, hermitian_embed(c) / 2.0, -1.0); // maximize
        prog.add_objective(obj);
        LinExpr tr;
        prog.psd_coeff(tr, w, rmat::Identity(2 * n, 2 * n) / 2.0);
        prog.add_inequality_le(tr, 1.0);

        const ConicSolution sol = conic::solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(std::abs(-sol.objective - oracle) < 1e-6 * (1.0 + oracle));
        CHECK(sol.gap_abs <= 1e-7 * (1.0 + std::abs(sol.objective)));

        // all weight sits on the top eigenvector
        const rmat y = smat(sol.segment(prog, "W"), 2 * n);
        const cmat wc = hermitian_extract(y);
        const cvec top = eig2.eigenvectors().col(n - 1);
        const double align = std::real(top.dot(wc * top));
        CHECK(align > 1.0 - 1e-5);
    }
}

TEST_CASE("solver: deterministic and positively homogeneous in the objective") {
    Rng rng(17);
    const cmat c = random_hermitian(4, rng) + 4.0 * cmat::Identity(4, 4);
    const auto build = [&](double scale) {
        ConicProgram prog;
        const int w = prog.add_psd(8, "W");
        LinExpr obj;
        prog.psd_coeff(obj, w, hermitian_embed(c) / 2.0, -scale);
        prog.add_objective(obj);
        LinExpr tr;
        prog.psd_coeff(tr, w, rmat::Identity(8, 8) / 2.0);
        prog.add_inequality_le(tr, 1.0);
        return prog;
    };
    const ConicProgram p1 = build(1.0);
    const ConicSolution a = conic::solve(p1);
    const ConicSolution b = conic::solve(p1);
    REQUIRE(a.status == SolveStatus::Optimal);
    CHECK(std::abs(a.objective - b.objective) <= 1e-9);
    CHECK((a.x - b.x).norm() == 0.0);

    const ConicSolution scaled = conic::solve(build(10.0));
    REQUIRE(scaled.status == SolveStatus::Optimal);
    CHECK(scaled.objective == Catch::Approx(10.0 * a.objective).epsilon(1e-6));
    CHECK((scaled.segment(p1, "W") - a.segment(p1, "W")).norm() < 1e-5);
}

TEST_CASE("solver: infeasible bounds are certified") {
    ConicProgram prog;
    const int x = prog.add_free(1);
    prog.add_objective_term(x, 1.0);
    prog.add_inequality_le(LinExpr{}.add(x, -1.0), -3.0); // x >= 3
    prog.add_inequality_le(LinExpr{}.add(x, 1.0), 2.0);   // x <= 2
    const ConicSolution sol = conic::solve(prog);
    CHECK(sol.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("solver: unbounded direction is certified") {
    ConicProgram prog;
    const int x = prog.add_nonneg(2);
    prog.add_objective_term(x, -1.0);
    LinExpr e;
    e.add(x, 1.0).add(x + 1, -1.0);
    prog.add_equality(e, 0.0);
    const ConicSolution sol = conic::solve(prog);
    CHECK(sol.status == SolveStatus::DualInfeasible);
}

TEST_CASE("solver: zero block pins variables") {
    ConicProgram prog;
    const int x = prog.add_free(1, "x");
    const int zv = prog.add_zero(2, "z");
    prog.add_objective_term(x, 1.0);
    LinExpr e;
    e.add(x, 1.0).add(zv, 5.0).add(zv + 1, -2.0);
    prog.add_equality(e, 4.0);
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.segment(prog, "z").norm() < 1e-8);
    CHECK(sol.segment(prog, "x")(0) == Catch::Approx(4.0).margin(1e-6));
}

TEST_CASE("solver: random SDPs agree with the eigenvalue oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        cmat c = random_hermitian(n, rng) + 3.0 * cmat::Identity(n, n);
        const double budget = 0.5 + rng.uniform();
        ConicProgram prog;
        const int w = prog.add_psd(2 * n, "W");
        LinExpr obj;
        prog.psd_coeff(obj, w, hermitian_embed(c) / 2.0, -1.0);
        prog.add_objective(obj);
        LinExpr tr;
        prog.psd_coeff(tr, w, rmat::Identity(2 * n, 2 * n) / 2.0);
        prog.add_inequality_le(tr, budget);
        const ConicSolution sol = conic::solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        Eigen::SelfAdjointEigenSolver<cmat> eig(c);
        const double oracle = budget * eig.eigenvalues().maxCoeff();
        CHECK(std::abs(-sol.objective - oracle) < 1e-6 * (1.0 + oracle));
        CHECK(sol.gap_abs <= 1e-7 * (1.0 + std::abs(sol.objective)));
        CHECK(sol.primal_res <= 1e-6);
        CHECK(sol.dual_res <= 1e-6);
    }
}

TEST_CASE("solver: mixed cones in one program") {
    // min ||x - x0|| + y with y >= 1, Tr(W) = 1, W >= 0, W_11 <= x_1.
    // W PSD forces W_11 >= 0, so x_1 >= 0 and the best x_1 is 0.
    ConicProgram prog;
    const int x = prog.add_free(2, "x");
    const int y = prog.add_nonneg(1, "y");
    const int t = prog.add_free(1, "t");
    const int w = prog.add_psd(3, "W");
    prog.add_objective_term(t, 1.0);
    prog.add_objective_term(y, 1.0);
    prog.add_inequality_le(LinExpr{}.add(y, -1.0), -1.0); // y >= 1
    LinExpr tr;
    prog.psd_coeff(tr, w, rmat::Identity(3, 3));
    prog.add_equality(tr, 1.0);
    rmat e11 = rmat::Zero(3, 3);
    e11(0, 0) = 1.0;
    LinExpr cons;
    prog.psd_coeff(cons, w, e11);
    cons.add(x, -1.0);
    prog.add_inequality_le(cons, 0.0); // W_11 <= x_1
    std::vector<LinExpr> diff;
    rvec x0(2);
    x0 << -0.3, 0.8;
    for (int i = 0; i < 2; ++i) {
        LinExpr e;
        e.add(x + i, 1.0);
        e.constant = -x0(i);
        diff.push_back(e);
    }
    prog.add_soc_norm_le(diff, LinExpr{}.add(t, 1.0));
    const ConicSolution sol = conic::solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == Catch::Approx(1.3).margin(1e-5));
    CHECK(sol.segment(prog, "x")(0) == Catch::Approx(0.0).margin(1e-5));
}

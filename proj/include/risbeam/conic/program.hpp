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

#ifndef RISBEAM_CONIC_PROGRAM_HPP
#define RISBEAM_CONIC_PROGRAM_HPP

#include "risbeam/conic/embed.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace risbeam::conic {

// ---------------------------------------------------------------------------
// Standard-form conic program container:
//
//   minimize    c' x
//   subject to  A x = b,   x in K
//
// where K is an ordered product of variable blocks.  Proper cone blocks are
// {nonnegative, second-order, PSD}; `zero` pins a block to 0; `free` blocks
// carry no cone (needed for sign-unconstrained model variables).  All
// inequality/second-order constraints are expressed through slack blocks
// linked by equality rows, which the builder methods below create.
// ---------------------------------------------------------------------------

enum class ConeType { Free, Zero, NonNeg, SecondOrder, Psd };

struct ConeBlock {
    ConeType type;
    int offset; // first variable index
    int dim;    // number of scalar variables (svec length for PSD)
    int side;   // matrix side for PSD blocks, 0 otherwise
};

struct LinTerm {
    int index;
    double value;
};

/// Sparse affine expression  sum_i value_i x_{index_i} + constant.
struct LinExpr {
    std::vector<LinTerm> terms;
    double constant = 0.0;

    LinExpr() = default;
    explicit LinExpr(double c) : constant(c) {}

    LinExpr &add(int index, double value) {
        if (value != 0.0)
            terms.push_back({index, value});
        return *this;
    }

    LinExpr &operator+=(const LinExpr &other) {
        terms.insert(terms.end(), other.terms.begin(), other.terms.end());
        constant += other.constant;
        return *this;
    }

    LinExpr scaled(double a) const {
        LinExpr out;
        out.constant = a * constant;
        out.terms.reserve(terms.size());
        for (const auto &t : terms)
            out.terms.push_back({t.index, a * t.value});
        return out;
    }
};

class ConicProgram {
  public:
    // -- variable blocks ----------------------------------------------------

    int add_free(int n, const std::string &name = {}) {
        return add_block(ConeType::Free, n, 0, name);
    }

    int add_zero(int n, const std::string &name = {}) {
        return add_block(ConeType::Zero, n, 0, name);
    }

    int add_nonneg(int n, const std::string &name = {}) {
        return add_block(ConeType::NonNeg, n, 0, name);
    }

    int add_soc(int dim, const std::string &name = {}) {
        if (dim < 1)
            throw SolverError("ConicProgram: SOC dimension must be >= 1");
        return add_block(ConeType::SecondOrder, dim, 0, name);
    }

    /// PSD block over real symmetric side x side matrices in svec form.
    int add_psd(int side, const std::string &name = {}) {
        if (side < 1)
            throw SolverError("ConicProgram: PSD side must be >= 1");
        return add_block(ConeType::Psd, svec_dim(side), side, name);
    }

    // -- objective ----------------------------------------------------------

    void add_objective_term(int var, double coeff) {
        if (var < 0 || var >= num_vars_)
            throw SolverError("ConicProgram: objective index out of range");
        obj_.add(var, coeff);
    }

    void add_objective(const LinExpr &e, double scale = 1.0) {
        for (const auto &t : e.terms)
            add_objective_term(t.index, scale * t.value);
        obj_.constant += scale * e.constant;
    }

    /// Appends Tr(C X_block) * scale to an expression, X_block a PSD block.
    void psd_coeff(LinExpr &e, int block_offset, const rmat &c_sym,
                   double scale = 1.0) const {
        const rvec sv = svec(symmetrize(c_sym));
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) != 0.0)
                e.add(block_offset + i, scale * sv(i));
    }

    // -- constraints ---------------------------------------------------------

    /// expr == rhs (expr constant folded into the right-hand side).
    int add_equality(const LinExpr &expr, double rhs = 0.0) {
        const int row = num_eq_++;
        for (const auto &t : expr.terms) {
            if (t.index < 0 || t.index >= num_vars_)
                throw SolverError("ConicProgram: equality index out of range");
            tri_row_.push_back(row);
            tri_var_.push_back(t.index);
            tri_val_.push_back(t.value);
        }
        rhs_.push_back(rhs - expr.constant);
        return row;
    }

    /// expr <= rhs via a fresh nonnegative slack.
    int add_inequality_le(const LinExpr &expr, double rhs = 0.0) {
        const int slack = add_nonneg(1);
        LinExpr e = expr;
        e.add(slack, 1.0);
        return add_equality(e, rhs);
    }

    /// || (v_1, ..., v_m) ||_2 <= bound, entries and bound affine.
    void add_soc_norm_le(const std::vector<LinExpr> &v, const LinExpr &bound) {
        const int m = static_cast<int>(v.size());
        const int z = add_soc(m + 1);
        link(z, bound);
        for (int i = 0; i < m; ++i)
            link(z + 1 + i, v[i]);
    }

    /// sum_i v_i^2 <= bound  (affine bound), via the standard rotation
    /// || (2 v, bound - 1) || <= bound + 1.
    void add_soc_quad_le(const std::vector<LinExpr> &v, const LinExpr &bound) {
        const int m = static_cast<int>(v.size());
        const int z = add_soc(m + 2);
        LinExpr top = bound;
        top.constant += 1.0;
        link(z, top);
        for (int i = 0; i < m; ++i)
            link(z + 1 + i, v[i].scaled(2.0));
        LinExpr bot = bound;
        bot.constant -= 1.0;
        link(z + 1 + m, bot);
    }

    // -- names ---------------------------------------------------------------

    void name_range(const std::string &name, int offset, int len) {
        names_[name] = {offset, len};
    }

    std::pair<int, int> named_range(const std::string &name) const {
        const auto it = names_.find(name);
        if (it == names_.end())
            throw SolverError("ConicProgram: unknown variable name " + name);
        return it->second;
    }

    bool has_name(const std::string &name) const {
        return names_.count(name) > 0;
    }

    // -- accessors -----------------------------------------------------------

    int num_vars() const { return num_vars_; }
    int num_equalities() const { return num_eq_; }
    const std::vector<ConeBlock> &blocks() const { return blocks_; }
    const LinExpr &objective() const { return obj_; }
    double objective_constant() const { return obj_.constant; }

    const std::vector<int> &triplet_rows() const { return tri_row_; }
    const std::vector<int> &triplet_cols() const { return tri_var_; }
    const std::vector<double> &triplet_vals() const { return tri_val_; }
    const std::vector<double> &rhs() const { return rhs_; }

    /// Total cone dimension (equals num_vars by construction).
    int cone_dim() const { return num_vars_; }

    void check_well_formed() const {
        int total = 0;
        for (const auto &b : blocks_)
            total += b.dim;
        if (total != num_vars_)
            throw SolverError("ConicProgram: cone dimension mismatch");
    }

  private:
    int add_block(ConeType type, int dim, int side, const std::string &name) {
        if (dim < 0)
            throw SolverError("ConicProgram: negative block dimension");
        const int offset = num_vars_;
        blocks_.push_back({type, offset, dim, side});
        num_vars_ += dim;
        if (!name.empty())
            name_range(name, offset, dim);
        return offset;
    }

    /// Equality tying cone variable `var` to an affine expression.
    void link(int var, const LinExpr &expr) {
        LinExpr e = expr.scaled(-1.0);
        e.add(var, 1.0);
        add_equality(e, 0.0);
    }

    int num_vars_ = 0;
    int num_eq_ = 0;
    std::vector<ConeBlock> blocks_;
    LinExpr obj_;
    std::vector<int> tri_row_; // equality index
    std::vector<int> tri_var_; // variable index
    std::vector<double> tri_val_;
    std::vector<double> rhs_;
    std::map<std::string, std::pair<int, int>> names_;
};

} // namespace risbeam::conic

#endif // RISBEAM_CONIC_PROGRAM_HPP

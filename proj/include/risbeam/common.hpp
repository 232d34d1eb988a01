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

#ifndef RISBEAM_COMMON_HPP
#define RISBEAM_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace risbeam {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;

/// Configuration / argument errors (bad dimensions, invalid parameters).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Dimension mismatches between runtime objects.
class DimensionError : public std::runtime_error {
  public:
    explicit DimensionError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Statistical model errors (invalid covariance and the like).
class ModelError : public std::runtime_error {
  public:
    explicit ModelError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Structural errors in optimization problems or solver misuse.
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string &msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string &msg) {
    if (!cond)
        throw DimensionError(msg);
}

inline double to_db(double linear) {
    return 10.0 * std::log10(std::max(linear, 1e-300));
}

inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

// ---------------------------------------------------------------------------
// Deterministic random number generation.
//
// All randomness in the library flows through Rng so that a given (seed,
// call sequence) pair reproduces bit-identical streams on every platform.
// The generator is splitmix64-seeded xoshiro-style mixing on top of a
// 64-bit counter; normals come from Box-Muller on 53-bit uniforms.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and an index.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so that small seeds decorrelate
        for (int i = 0; i < 4; ++i)
            splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    /// Circularly symmetric complex normal with unit variance, CN(0, 1).
    cplx cnormal() {
        const double re = normal();
        const double im = normal();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

    cvec cnormal_vector(Eigen::Index n) {
        cvec v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = cnormal();
        return v;
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Phase-vector helpers.
// ---------------------------------------------------------------------------

/// Entry-wise projection onto the unit-modulus manifold, e^{j angle(.)}.
inline cvec project_unit_modulus(const cvec &v) {
    cvec out(v.size());
    for (Eigen::Index n = 0; n < v.size(); ++n) {
        const double a = std::abs(v(n));
        out(n) = (a > 0.0) ? v(n) / a : cplx(1.0, 0.0);
    }
    return out;
}

inline double max_unit_modulus_deviation(const cvec &v) {
    double dev = 0.0;
    for (Eigen::Index n = 0; n < v.size(); ++n)
        dev = std::max(dev, std::abs(std::abs(v(n)) - 1.0));
    return dev;
}

inline bool is_unit_modulus(const cvec &v, double tol = 1e-9) {
    return max_unit_modulus_deviation(v) <= tol;
}

/// i.i.d. uniform random phases on the unit circle.
inline cvec random_phases(Eigen::Index n, Rng &rng) {
    cvec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * pi);
        v(i) = cplx(std::cos(phi), std::sin(phi));
    }
    return v;
}

/// Numerically exact Hermitian part, (A + A^H)/2.
inline cmat hermitize(const cmat &a) { return 0.5 * (a + a.adjoint()); }

inline rmat symmetrize(const rmat &a) { return 0.5 * (a + a.transpose()); }

} // namespace risbeam

#endif // RISBEAM_COMMON_HPP

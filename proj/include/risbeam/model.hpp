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

#ifndef RISBEAM_MODEL_HPP
#define RISBEAM_MODEL_HPP

#include "risbeam/common.hpp"

#include <vector>

namespace risbeam {

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

/// Dimensions, powers and noise levels of one ISAC scenario.
///
/// The BS has `num_antennas` transmit and receive antennas and serves
/// `num_ues` single-antenna users plus one sensing stream, so the stream
/// count is always num_ues + 1.  Powers and SINR targets are linear.
struct SystemConfig {
    int num_antennas = 30;                    // M
    int num_ues = 4;                          // K
    int num_ris_elements = 15;                // N
    double total_power = std::pow(10.0, 0.3); // P, linear (3 dB budget)
    rvec sinr_targets;                        // gamma_k, length K
    rvec ue_noise_vars;                       // sigma_k^2, length K
    double sensing_noise_var = 1.0;           // sigma_T^2
    double rician_kfactor = 10.0;             // K-factor of the static paths

    int num_streams() const { return num_ues + 1; }

    /// Fills sinr_targets / ue_noise_vars with uniform values.
    void set_uniform_targets(double gamma, double noise_var = 1.0) {
        sinr_targets = rvec::Constant(num_ues, gamma);
        ue_noise_vars = rvec::Constant(num_ues, noise_var);
    }

    void validate() const {
        if (num_antennas < 1 || num_ues < 0 || num_ris_elements < 1)
            throw ConfigError("SystemConfig: invalid dimensions");
        if (!(total_power > 0.0))
            throw ConfigError("SystemConfig: total power must be positive");
        if (sinr_targets.size() != num_ues || ue_noise_vars.size() != num_ues)
            throw ConfigError("SystemConfig: per-UE vectors must have length K");
        if ((sinr_targets.array() <= 0.0).any())
            throw ConfigError("SystemConfig: SINR targets must be positive");
        if ((ue_noise_vars.array() <= 0.0).any() || sensing_noise_var <= 0.0)
            throw ConfigError("SystemConfig: noise variances must be positive");
        if (rician_kfactor <= 0.0)
            throw ConfigError("SystemConfig: Rician K-factor must be positive");
    }
};

/// 2-D deployment geometry; used to derive line-of-sight steering angles.
struct Geometry {
    Eigen::Vector2d bs_pos{0.0, 20.0};
    Eigen::Vector2d ris_pos{50.0, 100.0};
    Eigen::Vector2d target_pos{150.0, 60.0};
    Eigen::Vector2d ue_region_min{100.0, 100.0};
    Eigen::Vector2d ue_region_max{150.0, 120.0};

    void validate() const {
        if (!((ue_region_max.array() > ue_region_min.array()).all()))
            throw ConfigError("Geometry: UE region must have positive area");
        if ((bs_pos - ris_pos).norm() == 0.0 || (bs_pos - target_pos).norm() == 0.0 ||
            (ris_pos - target_pos).norm() == 0.0)
            throw ConfigError("Geometry: positions must be distinct");
    }
};

/// All five propagation channels of one realization.
struct ChannelSet {
    cmat bs_to_ris;              // H_t, N x M, unit-modulus LoS entries
    std::vector<cvec> bs_to_ue;  // h_{s,k}, K vectors of length M
    std::vector<cvec> ris_to_ue; // h_{r,k}, K vectors of length N
    cvec bs_to_target;           // h_{s,T}, length M
    cvec ris_to_target;          // g, length N

    int num_antennas() const { return static_cast<int>(bs_to_ris.cols()); }
    int num_ris_elements() const { return static_cast<int>(bs_to_ris.rows()); }
    int num_ues() const { return static_cast<int>(bs_to_ue.size()); }
};

/// Second-order statistics of the two radar-cross-section coefficients.
struct RcsModel {
    double reflected_var = 1e-5;   // delta_r^2
    double static_var = 1e-5;      // delta_s^2
    cplx cross_moment = {9e-6, 0}; // delta_m = E[c_r c_s^*]

    void validate() const {
        if (reflected_var < 0.0 || static_var < 0.0)
            throw ModelError("RcsModel: variances must be nonnegative");
        if (std::abs(cross_moment) >
            std::sqrt(reflected_var * static_var) * (1.0 + 1e-12))
            throw ModelError("RcsModel: |delta_m| exceeds sqrt(dr^2 ds^2), "
                             "covariance not PSD");
    }
};

/// One joint draw of the reflected- and static-path RCS coefficients.
struct RcsSample {
    cplx reflected; // c_r
    cplx statics;   // c_s
};

/// Clustered-biased pixel failure: a contiguous block of RIS elements whose
/// phase is offset by a fixed bias.
struct FailureMask {
    std::vector<int> faulty; // 0-based indices, contiguous block
    double phase_bias = 0.0; // kappa, radians
    cvec mask;               // m_n = e^{j kappa} on the block, 1 elsewhere

    /// Builds the mask for `count` contiguous faulty elements starting at
    /// `offset` (0-based) of an N-element RIS.
    static FailureMask clustered(int n, int count, double kappa, int offset = 0) {
        if (count < 0 || offset < 0 || offset + count > n)
            throw ConfigError("FailureMask: faulty block out of range");
        FailureMask fm;
        fm.phase_bias = kappa;
        fm.mask = cvec::Ones(n);
        const cplx rot(std::cos(kappa), std::sin(kappa));
        for (int i = 0; i < count; ++i) {
            fm.faulty.push_back(offset + i);
            fm.mask(offset + i) = rot;
        }
        return fm;
    }
};

// ---------------------------------------------------------------------------
// Channel generation
// ---------------------------------------------------------------------------

/// Half-wavelength ULA steering vector of length n toward direction `angle`.
inline cvec steering_vector(Eigen::Index n, double angle) {
    cvec a(n);
    const double s = std::sin(angle);
    for (Eigen::Index q = 0; q < n; ++q) {
        const double phase = pi * static_cast<double>(q) * s;
        a(q) = cplx(std::cos(phase), std::sin(phase));
    }
    return a;
}

inline double bearing(const Eigen::Vector2d &from, const Eigen::Vector2d &to) {
    const Eigen::Vector2d d = to - from;
    return std::atan2(d.y(), d.x());
}

namespace detail {

/// Rician vector: sqrt(kf/(kf+1)) * LoS + sqrt(1/(kf+1)) * CN(0, I).
inline cvec rician_vector(const cvec &los, double kfactor, Rng &rng) {
    const double w_los = std::sqrt(kfactor / (kfactor + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kfactor + 1.0));
    return w_los * los + w_nlos * rng.cnormal_vector(los.size());
}

} // namespace detail

/// Draws one full channel realization.  UE positions are sampled uniformly
/// in the configured region; the draw is a pure function of (config,
/// geometry, seed).
inline ChannelSet generate_channels(const SystemConfig &config,
                                    const Geometry &geometry,
                                    std::uint64_t seed) {
    config.validate();
    geometry.validate();
    Rng rng(seed);

    const int m = config.num_antennas;
    const int n = config.num_ris_elements;
    const int k = config.num_ues;
    const double kf = config.rician_kfactor;

    ChannelSet ch;

    // BS->RIS: scattering-free LoS, outer product of the two array responses.
    const cvec a_ris = steering_vector(n, bearing(geometry.ris_pos, geometry.bs_pos));
    const cvec a_bs = steering_vector(m, bearing(geometry.bs_pos, geometry.ris_pos));
    ch.bs_to_ris = a_ris * a_bs.adjoint();

    // UE positions, then the per-UE static and reflected paths.
    std::vector<Eigen::Vector2d> ue_pos(k);
    for (int i = 0; i < k; ++i) {
        const double x = rng.uniform(geometry.ue_region_min.x(), geometry.ue_region_max.x());
        const double y = rng.uniform(geometry.ue_region_min.y(), geometry.ue_region_max.y());
        ue_pos[i] = {x, y};
    }

    ch.bs_to_ue.resize(k);
    ch.ris_to_ue.resize(k);
    for (int i = 0; i < k; ++i) {
        const cvec los = steering_vector(m, bearing(geometry.bs_pos, ue_pos[i]));
        ch.bs_to_ue[i] = detail::rician_vector(los, kf, rng);
        ch.ris_to_ue[i] = rng.cnormal_vector(n); // Rayleigh
    }

    const cvec los_t = steering_vector(m, bearing(geometry.bs_pos, geometry.target_pos));
    ch.bs_to_target = detail::rician_vector(los_t, kf, rng);

    const cvec los_g = steering_vector(n, bearing(geometry.ris_pos, geometry.target_pos));
    ch.ris_to_target = detail::rician_vector(los_g, kf, rng);

    return ch;
}

// ---------------------------------------------------------------------------
// RCS sampling
// ---------------------------------------------------------------------------

/// Joint circularly symmetric Gaussian draws of (c_r, c_s) with covariance
/// [[dr^2, dm], [dm^*, ds^2]], generated through its lower Cholesky factor.
inline std::vector<RcsSample> sample_rcs(const RcsModel &model, int count,
                                         std::uint64_t seed) {
    model.validate();
    Rng rng(seed);

    // Lower-triangular factor of the 2x2 covariance, with the degenerate
    // reflected_var = 0 case handled explicitly (then delta_m = 0 too).
    const double l11 = std::sqrt(model.reflected_var);
    cplx l21(0.0, 0.0);
    double rem = model.static_var;
    if (l11 > 0.0) {
        l21 = std::conj(model.cross_moment) / l11;
        rem = model.static_var - std::norm(l21);
    }
    const double l22 = std::sqrt(std::max(rem, 0.0));

    std::vector<RcsSample> out(static_cast<std::size_t>(count));
    for (auto &s : out) {
        const cplx z1 = rng.cnormal();
        const cplx z2 = rng.cnormal();
        s.reflected = l11 * z1;
        s.statics = l21 * z1 + l22 * z2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Failure mask and cascaded channel
// ---------------------------------------------------------------------------

/// theta_fault = theta (element-wise *) m.  Unit modulus is preserved exactly.
inline cvec apply_failure_mask(const cvec &theta, const FailureMask &mask) {
    require(theta.size() == mask.mask.size(),
            "apply_failure_mask: length mismatch");
    return theta.cwiseProduct(mask.mask);
}

/// End-to-end BS->UE k channel, h_{s,k} + H_t^H diag(theta) h_{r,k}.
/// `ue` is 0-based.
inline cvec cascaded_channel(const ChannelSet &ch, const cvec &theta, int ue) {
    if (ue < 0 || ue >= ch.num_ues())
        throw DimensionError("cascaded_channel: UE index out of range");
    require(theta.size() == ch.num_ris_elements(),
            "cascaded_channel: theta length mismatch");
    return ch.bs_to_ue[ue] +
           ch.bs_to_ris.adjoint() * theta.cwiseProduct(ch.ris_to_ue[ue]);
}

/// Same channel via the commuted form h_{s,k} + H_t^H diag(h_{r,k}) theta,
/// exposed as the M x N map theta -> reflected component.
inline cmat cascaded_channel_map(const ChannelSet &ch, int ue) {
    if (ue < 0 || ue >= ch.num_ues())
        throw DimensionError("cascaded_channel_map: UE index out of range");
    return ch.bs_to_ris.adjoint() * ch.ris_to_ue[ue].asDiagonal();
}

} // namespace risbeam

#endif // RISBEAM_MODEL_HPP

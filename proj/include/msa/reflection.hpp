// SPDX-License-Identifier: Apache-2.0
//
// msa: metasurface superheterodyne transmitter simulator
// Copyright (C) 2026 The msa authors
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

// Unit and array reflection models.
//
// A unit cell reflects with Gamma(o, i, t) = F(o) F(i) * alpha(t) e^{j beta(t)}: a static separable
// pattern times a programmable coefficient. The array maps an incident angular field to the scattered
// one through e_out(t) = W^H Lambda(t) Phi W e_in(t) where W = U diag(f), Lambda(t) carries the
// per-element magnitudes and Phi the per-element beamforming phases.

#pragma once

#include "msa/errors.hpp"
#include "msa/geometry.hpp"
#include "msa/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace msa
{
    // Element pattern F(Omega) = cos^q(theta), real and at most one in magnitude
    template <typename Real = double>
    struct CosinePattern
    {
        Real exponent = Real(1);

        Complex<Real> operator()(const Direction<Real> &dir) const
        {
            return Complex<Real>(std::pow(std::cos(dir.theta), exponent), Real(0));
        }
    };

    // Pattern values f_m = F(Omega_m) sampled on one direction grid
    template <typename Real = double>
    class ElementPattern
    {
    public:
        explicit ElementPattern(CVector<Real> values) : values_(std::move(values))
        {
            for (Eigen::Index m = 0; m < values_.size(); ++m)
                if (!(std::abs(values_(m)) <= Real(1) + Real(1e-12)))
                    throw DomainError("element pattern magnitude exceeds one at direction " + std::to_string(m));
        }

        template <typename Pattern>
        static ElementPattern sample(const Pattern &pattern, const DirectionGrid<Real> &grid)
        {
            CVector<Real> f(grid.size());
            for (Eigen::Index m = 0; m < grid.size(); ++m)
                f(m) = pattern(grid[m]);
            return ElementPattern(std::move(f));
        }

        static ElementPattern isotropic(Eigen::Index m) { return ElementPattern(CVector<Real>::Ones(m)); }

        const CVector<Real> &values() const { return values_; }
        Eigen::Index size() const { return values_.size(); }

    private:
        CVector<Real> values_;
    };

    template <typename Real>
    CMatrix<Real> transform_matrix(const CMatrix<Real> &U, const ElementPattern<Real> &pattern)
    {
        return transform_matrix(U, pattern.values());
    }

    // Gamma = Gamma_dyn * F(Omega_i) * F(Omega_o)
    template <typename Real>
    Complex<Real> unit_scatter(Complex<Real> pattern_in, Complex<Real> pattern_out, Complex<Real> dynamic)
    {
        return dynamic * pattern_in * pattern_out;
    }

    // Hardware phase states of the two-path unit cell (about 170 and -25 degrees)
    template <typename Real = double>
    std::vector<Real> default_phase_palette()
    {
        return {Real(170) * pi<Real> / Real(180), Real(-25) * pi<Real> / Real(180)};
    }

    // Programmable state of the surface for one coherence block.
    //
    // magnitudes is K x T: row k is element k's magnitude time series alpha_k(t), sampled on the modem
    // clock. phases holds one constant phase per element for the whole block.
    template <typename Real = double>
    struct SurfaceConfig
    {
        RMatrix<Real> magnitudes;
        RVector<Real> phases;
        std::optional<std::vector<Real>> palette; // radians; unset means continuous phases

        Eigen::Index elements() const { return phases.size(); }
        Eigen::Index samples() const { return magnitudes.cols(); }

        // Same magnitude series alpha(t) applied to every element
        static SurfaceConfig uniform(const RVector<Real> &alpha, RVector<Real> phases)
        {
            SurfaceConfig cfg;
            cfg.magnitudes = alpha.transpose().replicate(phases.size(), 1);
            cfg.phases = std::move(phases);
            return cfg;
        }

        CVector<Real> phase_vector() const { return unit_phasors(phases); }

        void validate() const
        {
            require_dims(magnitudes.rows() == phases.size(),
                         "surface has " + std::to_string(phases.size()) + " phases but " + std::to_string(magnitudes.rows()) +
                             " magnitude rows");
            for (Eigen::Index t = 0; t < magnitudes.cols(); ++t)
                for (Eigen::Index k = 0; k < magnitudes.rows(); ++k)
                {
                    const Real a = magnitudes(k, t);
                    if (!(a >= Real(0) && a <= Real(1)))
                        throw StateError("reflection magnitude " + std::to_string(double(a)) + " of element " + std::to_string(k) +
                                         " at sample " + std::to_string(t) + " outside [0, 1]");
                }
            for (Eigen::Index k = 0; k < phases.size(); ++k)
                if (!std::isfinite(phases(k)))
                    throw StateError("phase of element " + std::to_string(k) + " is not finite");
            if (palette)
            {
                if (palette->empty())
                    throw StateError("phase palette is set but empty");
                for (Eigen::Index k = 0; k < phases.size(); ++k)
                {
                    bool member = false;
                    for (Real p : *palette)
                        member = member || std::abs(wrap_pi(phases(k) - p)) < Real(1e-9);
                    if (!member)
                        throw StateError("phase of element " + std::to_string(k) + " is not a palette state");
                }
            }
        }
    };

    // Scattered angular field, one column per sample: e_out(t) = W^H diag(alpha_k(t) e^{j phi_k}) W e_in(t)
    template <typename Real>
    CMatrix<Real> array_scatter(const CMatrix<Real> &W, const SurfaceConfig<Real> &cfg, const CMatrix<Real> &e_in)
    {
        cfg.validate();
        require_dims(W.rows() == cfg.elements(), "transform matrix rows do not match surface elements");
        require_dims(e_in.rows() == W.cols(), "incident field length does not match the direction grid");
        require_dims(e_in.cols() == cfg.samples(), "incident field and magnitudes are not on the same clock");

        const CMatrix<Real> element_field = W * e_in;
        const CMatrix<Real> modulated =
            (cfg.magnitudes.template cast<Complex<Real>>().array().colwise() * cfg.phase_vector().array()) * element_field.array();
        return W.adjoint() * modulated;
    }

    // |e_out(Omega_m)|^2 with all magnitudes frozen at one
    template <typename Real>
    RVector<Real> beampattern(const CMatrix<Real> &W, const RVector<Real> &phases, const CVector<Real> &incident)
    {
        require_dims(W.rows() == phases.size(), "phase count does not match transform matrix rows");
        require_dims(W.cols() == incident.size(), "incident field length does not match the direction grid");
        const CVector<Real> out = W.adjoint() * (unit_phasors(phases).array() * (W * incident).array()).matrix();
        return out.cwiseAbs2();
    }
} // namespace msa

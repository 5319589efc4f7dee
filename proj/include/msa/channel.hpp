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

// Multipath channels on both sides of the surface, folded with the static transform W into the
// effective channels H_i = W H_tx-surface and H_o = H_surface-rx W^H.

#pragma once

#include "msa/errors.hpp"
#include "msa/geometry.hpp"
#include "msa/types.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace msa
{
    template <typename Real = double>
    struct PathComponent
    {
        Complex<Real> gain{1, 0};
        Real delay_s = Real(0);
        Direction<Real> at_surface{};  // departure (rx side) or arrival (tx side) direction at the surface
        Direction<Real> at_terminal{}; // direction seen from the terminal array

        void validate() const
        {
            if (!(delay_s >= Real(0)) || !std::isfinite(delay_s))
                throw DomainError("path delay must be finite and non-negative");
            if (!std::isfinite(gain.real()) || !std::isfinite(gain.imag()))
                throw DomainError("path gain must be finite");
            Direction<Real>::make(at_surface.theta, at_surface.phi);
            Direction<Real>::make(at_terminal.theta, at_terminal.phi);
        }

        bool operator==(const PathComponent &) const = default;
    };

    // Base-station antenna array, electrical positions in radians
    template <typename Real = double>
    struct TerminalArray
    {
        Positions<Real> positions;

        Eigen::Index size() const { return positions.cols(); }

        // Uniform linear array along x with the first element at the origin
        static TerminalArray ula(Eigen::Index count, Real spacing_wavelengths = Real(0.5))
        {
            if (count < 1)
                throw DomainError("terminal array needs at least one antenna");
            TerminalArray t;
            t.positions = Positions<Real>::Zero(3, count);
            for (Eigen::Index n = 0; n < count; ++n)
                t.positions(0, n) = two_pi<Real> * spacing_wavelengths * Real(n);
            return t;
        }
    };

    template <typename Real>
    CVector<Real> array_response(const TerminalArray<Real> &array, const Direction<Real> &dir)
    {
        return steering_vector(array.positions, dir);
    }

    namespace detail
    {
        template <typename Real>
        Real sinc(Real x)
        {
            if (std::abs(x) < Real(1e-12))
                return Real(1);
            if (x == std::round(x))
                return Real(0);
            return std::sin(pi<Real> * x) / (pi<Real> * x);
        }

        // N-periodic Dirichlet kernel: one at 0, zero at the other integers
        template <typename Real>
        Real periodic_dirichlet(Real x, int n)
        {
            const Real s = std::sin(pi<Real> * x / Real(n));
            if (std::abs(s) < Real(1e-12))
                return Real(1);
            if (x == std::round(x))
                return Real(0);
            if (n % 2 == 1)
                return std::sin(pi<Real> * x) / (Real(n) * s);
            return std::sin(pi<Real> * x) / (Real(n) * std::tan(pi<Real> * x / Real(n)));
        }
    } // namespace detail

    // Angular selection vector v(Omega): a discrete stand-in for delta(Omega_m - Omega) that sums to one.
    //
    // On a hemisphere lattice the kernel is separable: sinc along cos(theta) times the periodic
    // Dirichlet kernel along phi, both in units of one grid cell. A direction exactly on a lattice
    // point gives a one-hot vector. Grids without a lattice snap to the nearest direction.
    template <typename Real>
    RVector<Real> selection_vector(const DirectionGrid<Real> &grid, const Direction<Real> &dir, Diagnostics *diag = nullptr)
    {
        Direction<Real>::make(dir.theta, dir.phi);
        RVector<Real> v = RVector<Real>::Zero(grid.size());
        if (!grid.lattice())
        {
            const Eigen::Index m = grid.nearest(dir);
            if (!(grid[m] == dir))
                note(diag, "direction (" + std::to_string(double(dir.theta)) + ", " + std::to_string(double(dir.phi)) +
                               ") is off-grid; snapped to grid direction " + std::to_string(m));
            v(m) = Real(1);
            return v;
        }

        const auto [n_theta, n_phi] = *grid.lattice();
        const Real mu = std::cos(dir.theta);
        const Real x_phi = dir.phi / (two_pi<Real> / Real(n_phi));
        RVector<Real> w_mu(n_theta), w_phi(n_phi);
        for (int i = 0; i < n_theta; ++i)
        {
            const Real mu_i = Real(1) - (Real(i) + Real(0.5)) / Real(n_theta);
            Real x = (mu - mu_i) * Real(n_theta);
            // snap round-off so lattice points stay exactly one-hot
            if (std::abs(x - std::round(x)) < Real(1e-9))
                x = std::round(x);
            w_mu(i) = detail::sinc(x);
        }
        for (int j = 0; j < n_phi; ++j)
        {
            Real x = x_phi - Real(j);
            if (std::abs(x - std::round(x)) < Real(1e-9))
                x = std::round(x);
            w_phi(j) = detail::periodic_dirichlet(x, n_phi);
        }
        for (int i = 0; i < n_theta; ++i)
            for (int j = 0; j < n_phi; ++j)
                v(Eigen::Index(i) * n_phi + j) = w_mu(i) * w_phi(j);

        const Real total = v.sum();
        if (std::abs(total) < Real(1e-6))
        {
            note(diag, "selection kernel degenerate for direction; snapped to nearest grid direction");
            v.setZero();
            v(grid.nearest(dir)) = Real(1);
            return v;
        }
        return v / total;
    }

    // H_surface-rx = sum_l alpha_l e^{-j 2 pi f_c tau_l} a_r(Omega_l^r) v(Omega_l^o)^T, N_r x M
    template <typename Real>
    CMatrix<Real> channel_surface_to_rx(std::span<const PathComponent<Real>> paths, const DirectionGrid<Real> &grid,
                                        const TerminalArray<Real> &rx, Real carrier_hz, Diagnostics *diag = nullptr)
    {
        CMatrix<Real> H = CMatrix<Real>::Zero(rx.size(), grid.size());
        for (const auto &path : paths)
        {
            path.validate();
            const Complex<Real> g = path.gain * std::polar(Real(1), -two_pi<Real> * carrier_hz * path.delay_s);
            const CVector<Real> v = selection_vector(grid, path.at_surface, diag).template cast<Complex<Real>>();
            H.noalias() += g * array_response(rx, path.at_terminal) * v.transpose();
        }
        return H;
    }

    // H_tx-surface = sum_q beta_q e^{-j 2 pi f_c zeta_q} v(Omega_q^i) a_t(Omega_q^t)^T, M x N_t
    template <typename Real>
    CMatrix<Real> channel_tx_to_surface(std::span<const PathComponent<Real>> paths, const DirectionGrid<Real> &grid,
                                        const TerminalArray<Real> &tx, Real carrier_hz, Diagnostics *diag = nullptr)
    {
        CMatrix<Real> H = CMatrix<Real>::Zero(grid.size(), tx.size());
        for (const auto &path : paths)
        {
            path.validate();
            const Complex<Real> g = path.gain * std::polar(Real(1), -two_pi<Real> * carrier_hz * path.delay_s);
            const CVector<Real> v = selection_vector(grid, path.at_surface, diag).template cast<Complex<Real>>();
            H.noalias() += g * v * array_response(tx, path.at_terminal).transpose();
        }
        return H;
    }

    template <typename Real = double>
    struct EffectiveChannels
    {
        CMatrix<Real> H_i;   // K x N_t
        CMatrix<Real> H_o;   // N_r x K
        CVector<Real> h_eff; // K, = H_i w_t
    };

    template <typename Real>
    EffectiveChannels<Real> effective_channels(const CMatrix<Real> &W, const CMatrix<Real> &H_tx_surface,
                                               const CMatrix<Real> &H_surface_rx, const CVector<Real> &tx_beam)
    {
        require_dims(H_tx_surface.rows() == W.cols(), "tx-to-surface channel rows do not match the direction grid");
        require_dims(H_surface_rx.cols() == W.cols(), "surface-to-rx channel columns do not match the direction grid");
        require_dims(tx_beam.size() == H_tx_surface.cols(), "tx beam length does not match the tx array");
        EffectiveChannels<Real> out;
        out.H_i = W * H_tx_surface;
        out.H_o = H_surface_rx * W.adjoint();
        out.h_eff = out.H_i * tx_beam;
        return out;
    }

    // y + n, n ~ CN(0, sigma2 I) drawn from a generator seeded with `seed`
    template <typename Real>
    CMatrix<Real> add_noise(const CMatrix<Real> &y, Real sigma2, std::uint64_t seed)
    {
        if (!(sigma2 >= Real(0)))
            throw DomainError("noise variance must be non-negative");
        if (sigma2 == Real(0))
            return y;
        Rng rng(seed);
        return y + complex_gaussian<Real>(y.rows(), y.cols(), sigma2, rng);
    }
} // namespace msa

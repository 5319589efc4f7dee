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

// Far-field geometry of a planar reflecting array in the z = 0 plane: directions on the front
// hemisphere, electrical element positions, steering vectors and the phase-difference matrix.

#pragma once

#include "msa/errors.hpp"
#include "msa/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace msa
{
    // Direction on the front hemisphere: zenith theta in [0, pi/2), azimuth phi in [0, 2*pi)
    template <typename Real = double>
    struct Direction
    {
        Real theta{};
        Real phi{};

        static Direction make(Real theta, Real phi)
        {
            if (!(theta >= Real(0) && theta < pi<Real> / Real(2)))
                throw DomainError("direction zenith angle " + std::to_string(double(theta)) + " outside [0, pi/2)");
            if (!(phi >= Real(0) && phi < two_pi<Real>))
                throw DomainError("direction azimuth angle " + std::to_string(double(phi)) + " outside [0, 2*pi)");
            return Direction{theta, phi};
        }

        bool operator==(const Direction &) const = default;
    };

    template <typename Real>
    Vec3<Real> unit_vector(const Direction<Real> &dir)
    {
        // re-validate: a Direction may have been aggregate-initialized
        Direction<Real>::make(dir.theta, dir.phi);
        const Real st = std::sin(dir.theta);
        return Vec3<Real>(st * std::cos(dir.phi), st * std::sin(dir.phi), std::cos(dir.theta));
    }

    // Ordered set of M directions discretizing the hemisphere.
    //
    // Grids built by hemisphere() are uniform in (cos theta, phi) so every cell subtends the same solid
    // angle; they remember their lattice so the channel module can use a separable selection kernel.
    // Grids built from an explicit list have no lattice.
    template <typename Real = double>
    class DirectionGrid
    {
    public:
        struct Lattice
        {
            int n_theta = 0; // cells along cos(theta)
            int n_phi = 0;   // cells along phi
        };

        explicit DirectionGrid(std::vector<Direction<Real>> directions)
            : directions_(std::move(directions))
        {
            if (directions_.empty())
                throw DomainError("direction grid needs at least one direction");
            for (const auto &d : directions_)
                Direction<Real>::make(d.theta, d.phi);
            for (size_t a = 0; a < directions_.size(); ++a)
                for (size_t b = a + 1; b < directions_.size(); ++b)
                    if (directions_[a] == directions_[b])
                        throw DomainError("direction grid entries " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
        }

        static DirectionGrid hemisphere(int n_theta = 32, int n_phi = 64)
        {
            if (n_theta < 1 || n_phi < 1)
                throw DomainError("hemisphere grid needs n_theta, n_phi >= 1");
            std::vector<Direction<Real>> dirs;
            dirs.reserve(size_t(n_theta) * size_t(n_phi));
            for (int i = 0; i < n_theta; ++i)
            {
                const Real mu = Real(1) - (Real(i) + Real(0.5)) / Real(n_theta);
                const Real theta = std::acos(mu);
                for (int j = 0; j < n_phi; ++j)
                    dirs.push_back({theta, two_pi<Real> * Real(j) / Real(n_phi)});
            }
            DirectionGrid grid(std::move(dirs));
            grid.lattice_ = Lattice{n_theta, n_phi};
            return grid;
        }

        Eigen::Index size() const { return Eigen::Index(directions_.size()); }
        const Direction<Real> &operator[](Eigen::Index m) const { return directions_[size_t(m)]; }
        const std::vector<Direction<Real>> &directions() const { return directions_; }
        const std::optional<Lattice> &lattice() const { return lattice_; }

        // Index of the grid direction with the largest u(dir).u(grid) (smallest great-circle distance)
        Eigen::Index nearest(const Direction<Real> &dir) const
        {
            const Vec3<Real> u = unit_vector(dir);
            Eigen::Index best = 0;
            Real best_dot = Real(-2);
            for (Eigen::Index m = 0; m < size(); ++m)
            {
                const Real d = u.dot(unit_vector((*this)[m]));
                if (d > best_dot)
                {
                    best_dot = d;
                    best = m;
                }
            }
            return best;
        }

        bool operator==(const DirectionGrid &other) const { return directions_ == other.directions_; }

    private:
        std::vector<Direction<Real>> directions_;
        std::optional<Lattice> lattice_;
    };

    // K_r x K_c rectangular array with uniform spacing
    template <typename Real = double>
    struct ArrayGeometry
    {
        int rows = 1;
        int cols = 1;
        Real spacing_m = Real(0);
        Real wavelength_m = Real(0);

        static ArrayGeometry make(int rows, int cols, Real spacing_m, Real wavelength_m)
        {
            if (rows < 1 || cols < 1)
                throw DomainError("array needs at least one row and one column");
            if (!(spacing_m > Real(0)))
                throw DomainError("element spacing must be positive");
            if (!(wavelength_m > Real(0)))
                throw DomainError("wavelength must be positive");
            return ArrayGeometry{rows, cols, spacing_m, wavelength_m};
        }

        Eigen::Index size() const { return Eigen::Index(rows) * Eigen::Index(cols); }

        // 2*pi*spacing/wavelength, the phase advance between neighbours at grazing incidence
        Real electrical_spacing() const { return two_pi<Real> * spacing_m / wavelength_m; }

        // Row-major linearization of the 1-based (row i, column j) pair into a 0-based storage index
        Eigen::Index linear_index(int i, int j) const
        {
            return Eigen::Index(i - 1) * cols + Eigen::Index(j - 1);
        }

        bool operator==(const ArrayGeometry &) const = default;
    };

    // Electrical positions p_k = (2*pi*spacing/lambda) * [i, j, 0], i and j 1-based
    template <typename Real>
    Positions<Real> element_positions(const ArrayGeometry<Real> &geom)
    {
        ArrayGeometry<Real>::make(geom.rows, geom.cols, geom.spacing_m, geom.wavelength_m);
        Positions<Real> p = Positions<Real>::Zero(3, geom.size());
        const Real s = geom.electrical_spacing();
        for (int i = 1; i <= geom.rows; ++i)
            for (int j = 1; j <= geom.cols; ++j)
            {
                const Eigen::Index k = geom.linear_index(i, j);
                p(0, k) = s * Real(i);
                p(1, k) = s * Real(j);
            }
        return p;
    }

    // [exp(-j u(dir).p_1), ..., exp(-j u(dir).p_N)]^T for any set of electrical positions
    template <typename Real>
    CVector<Real> steering_vector(const Positions<Real> &positions, const Direction<Real> &dir)
    {
        const Eigen::Matrix<Real, 1, Eigen::Dynamic> phase = unit_vector(dir).transpose() * positions;
        return unit_phasors((-phase).transpose().eval());
    }

    // U(k, m) = exp(-j u(Omega_m).p_k), K x M
    template <typename Real>
    CMatrix<Real> phase_difference_matrix(const Positions<Real> &positions, const DirectionGrid<Real> &grid)
    {
        Eigen::Matrix<Real, 3, Eigen::Dynamic> u(3, grid.size());
        for (Eigen::Index m = 0; m < grid.size(); ++m)
            u.col(m) = unit_vector(grid[m]);
        const RMatrix<Real> phase = positions.transpose() * u;
        return unit_phasors((-phase).eval());
    }

    template <typename Real>
    CMatrix<Real> phase_difference_matrix(const ArrayGeometry<Real> &geom, const DirectionGrid<Real> &grid)
    {
        return phase_difference_matrix(element_positions(geom), grid);
    }

    // W = U diag(f); f holds the element pattern sampled on the same grid as U's columns
    template <typename Real>
    CMatrix<Real> transform_matrix(const CMatrix<Real> &U, const CVector<Real> &pattern)
    {
        require_dims(pattern.size() == U.cols(),
                     "element pattern has " + std::to_string(pattern.size()) + " samples, grid has " + std::to_string(U.cols()));
        return U * pattern.asDiagonal();
    }
} // namespace msa

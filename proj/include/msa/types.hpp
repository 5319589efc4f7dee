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

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace msa
{
    // Dense aliases, all templated on the real scalar (float or double)
    template <typename Real>
    using Complex = std::complex<Real>;

    template <typename Real>
    using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

    template <typename Real>
    using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

    template <typename Real>
    using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

    template <typename Real>
    using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

    template <typename Real>
    using Vec3 = Eigen::Matrix<Real, 3, 1>;

    template <typename Real>
    using Positions = Eigen::Matrix<Real, 3, Eigen::Dynamic>; // one column per element

    template <typename Real>
    inline constexpr Real pi = std::numbers::pi_v<Real>;

    template <typename Real>
    inline constexpr Real two_pi = Real(2) * std::numbers::pi_v<Real>;

    inline constexpr double speed_of_light = 299792458.0; // m/s

    // Warning-level messages collected by operations that can proceed but want to report something
    using Diagnostics = std::vector<std::string>;

    inline void note(Diagnostics *diag, std::string message)
    {
        if (diag != nullptr)
            diag->push_back(std::move(message));
    }

    // Every stochastic operation takes an explicit generator or seed; nothing is shared
    using Rng = std::mt19937_64;

    // SplitMix64 finalizer, used to derive independent per-trial seeds from a master seed
    constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
    {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Wrap an angle into [0, 2*pi)
    template <typename Real>
    Real wrap_two_pi(Real angle)
    {
        Real r = std::fmod(angle, two_pi<Real>);
        if (r < Real(0))
            r += two_pi<Real>;
        if (r >= two_pi<Real>)
            r = Real(0);
        return r;
    }

    // Signed circular distance in (-pi, pi]
    template <typename Real>
    Real wrap_pi(Real angle)
    {
        Real r = wrap_two_pi(angle + pi<Real>) - pi<Real>;
        return r == -pi<Real> ? pi<Real> : r;
    }

    // Entrywise e^{j*angle}
    template <typename Derived>
    auto unit_phasors(const Eigen::MatrixBase<Derived> &angles)
    {
        using Real = typename Derived::Scalar;
        return angles.unaryExpr([](Real a) { return std::polar(Real(1), a); });
    }

    // i.i.d. circularly-symmetric complex Gaussian entries with the given variance
    template <typename Real>
    CMatrix<Real> complex_gaussian(Eigen::Index rows, Eigen::Index cols, Real variance, Rng &rng)
    {
        std::normal_distribution<Real> normal(Real(0), std::sqrt(variance / Real(2)));
        CMatrix<Real> out(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
            {
                const Real re = normal(rng);
                const Real im = normal(rng);
                out(r, c) = Complex<Real>(re, im);
            }
        return out;
    }

    // Unit-modulus vector with phases uniform on [0, 2*pi)
    template <typename Real>
    CVector<Real> random_phasors(Eigen::Index n, Rng &rng)
    {
        std::uniform_real_distribution<Real> uniform(Real(0), two_pi<Real>);
        CVector<Real> out(n);
        for (Eigen::Index i = 0; i < n; ++i)
            out(i) = std::polar(Real(1), uniform(rng));
        return out;
    }
} // namespace msa

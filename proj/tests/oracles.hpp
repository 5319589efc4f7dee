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

// Reference implementations used by the tests. They are written from the defining formulas with plain
// loops and share no code with the library beyond the Eigen containers.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <bit>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle
{
    using cd = std::complex<double>;
    inline constexpr double pi = std::numbers::pi;

    inline double rel_err(double a, double b)
    {
        const double s = std::max(std::abs(a), std::abs(b));
        return s == 0.0 ? 0.0 : std::abs(a - b) / s;
    }

    inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

    // Binary-reflected Gray code built by reflection: G(n+1) = 0G(n), 1G(n)^R
    inline std::vector<int> gray_sequence(int bits)
    {
        std::vector<int> g{0};
        for (int b = 0; b < bits; ++b)
        {
            const int n = int(g.size());
            for (int i = n - 1; i >= 0; --i)
                g.push_back(g[size_t(i)] | (1 << b));
        }
        return g;
    }

    // Exact bit error rate of square Gray-coded M-QAM with unit average symbol energy in complex AWGN of
    // total variance sigma2 (sigma2 / 2 per axis), by enumeration of every transmitted level and every
    // decision interval on one axis.
    inline double gray_qam_ber(int order, double sigma2)
    {
        const int side = int(std::lround(std::sqrt(double(order))));
        const int axis_bits = int(std::lround(std::log2(double(side))));
        const double d = 1.0 / std::sqrt(2.0 * (double(side) * side - 1.0) / 3.0); // half the level spacing
        const double sd = std::sqrt(sigma2 / 2.0);
        const auto gray = gray_sequence(axis_bits);
        const auto cdf = [&](double x) { return 1.0 - q_function(x / sd); };
        double errors = 0.0;
        for (int i = 0; i < side; ++i)
        {
            const double centre = (2.0 * i - (side - 1)) * d;
            for (int j = 0; j < side; ++j)
            {
                const double lo = j == 0 ? -INFINITY : (2.0 * j - side) * d;
                const double hi = j == side - 1 ? INFINITY : (2.0 * j - side + 2.0) * d;
                const double p = (std::isinf(hi) ? 1.0 : cdf(hi - centre)) - (std::isinf(lo) ? 0.0 : cdf(lo - centre));
                errors += p * double(std::popcount(unsigned(gray[size_t(i)] ^ gray[size_t(j)])));
            }
        }
        return errors / double(side * axis_bits);
    }

    // Union-free symbol error rate of square M-QAM with unit average energy
    inline double qam_ser(int order, double sigma2)
    {
        const double side = std::sqrt(double(order));
        const double d = 1.0 / std::sqrt(2.0 * (side * side - 1.0) / 3.0);
        const double p = 2.0 * (1.0 - 1.0 / side) * q_function(d / std::sqrt(sigma2 / 2.0));
        return 1.0 - (1.0 - p) * (1.0 - p);
    }

    inline Eigen::MatrixXcd gaussian(Eigen::Index r, Eigen::Index c, double var, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
        Eigen::MatrixXcd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i)
            {
                const double re = n(rng);
                m(i, j) = cd(re, n(rng));
            }
        return m;
    }

    inline Eigen::MatrixXcd matmul(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b)
    {
        Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(a.rows(), b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j)
                for (Eigen::Index k = 0; k < a.cols(); ++k)
                    c(i, j) += a(i, k) * b(k, j);
        return c;
    }

    // exp(-j u(theta, phi) . p) for an element at 1-based lattice position (i, j), spacing s in radians
    inline cd element_phasor(double theta, double phi, int i, int j, double s)
    {
        const double ux = std::sin(theta) * std::cos(phi);
        const double uy = std::sin(theta) * std::sin(phi);
        return std::exp(cd(0.0, -(ux * s * i + uy * s * j)));
    }

    // ||H diag(phi) h||^2 with H given row-wise, explicit loops
    inline double received_power(const Eigen::MatrixXcd &H, const Eigen::VectorXcd &phi, const Eigen::VectorXcd &h)
    {
        double total = 0.0;
        for (Eigen::Index r = 0; r < H.rows(); ++r)
        {
            cd acc = 0.0;
            for (Eigen::Index k = 0; k < H.cols(); ++k)
                acc += H(r, k) * phi(k) * h(k);
            total += std::norm(acc);
        }
        return total;
    }

    // Maximum of f over {e^{j 2 pi l / levels}}^K, returning the maximizer through `best`
    inline double exhaustive(const std::function<double(const Eigen::VectorXcd &)> &f, int K, int levels,
                             Eigen::VectorXcd *best = nullptr)
    {
        std::vector<int> idx(size_t(K), 0);
        Eigen::VectorXcd phi(K);
        double top = -INFINITY;
        for (;;)
        {
            for (int k = 0; k < K; ++k)
                phi(k) = std::polar(1.0, 2.0 * pi * idx[size_t(k)] / levels);
            const double v = f(phi);
            if (v > top)
            {
                top = v;
                if (best)
                    *best = phi;
            }
            int k = 0;
            while (k < K && ++idx[size_t(k)] == levels)
                idx[size_t(k++)] = 0;
            if (k == K)
                return top;
        }
    }

    // Central-difference gradient of a real function of a complex vector, returned as
    // d f / d Re(z_k) + j d f / d Im(z_k)
    inline Eigen::VectorXcd fd_gradient(const std::function<double(const Eigen::VectorXcd &)> &f, const Eigen::VectorXcd &z,
                                        double h = 1e-6)
    {
        Eigen::VectorXcd g(z.size());
        for (Eigen::Index k = 0; k < z.size(); ++k)
        {
            Eigen::VectorXcd zp = z, zm = z;
            zp(k) += h;
            zm(k) -= h;
            const double dre = (f(zp) - f(zm)) / (2.0 * h);
            zp = z;
            zm = z;
            zp(k) += cd(0.0, h);
            zm(k) -= cd(0.0, h);
            const double dim = (f(zp) - f(zm)) / (2.0 * h);
            g(k) = cd(dre, dim);
        }
        return g;
    }

    // Pearson correlation of two equally sized real grids
    inline double pearson(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b)
    {
        const double ma = a.mean(), mb = b.mean();
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i)
        {
            const double x = a.data()[i] - ma, y = b.data()[i] - mb;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        return sab / std::sqrt(saa * sbb);
    }

    // Direct DFT of a real record at bin k
    inline cd dft_bin(const Eigen::VectorXd &x, double k)
    {
        cd acc = 0.0;
        for (Eigen::Index n = 0; n < x.size(); ++n)
            acc += x(n) * std::polar(1.0, -2.0 * pi * k * double(n) / double(x.size()));
        return acc;
    }
} // namespace oracle

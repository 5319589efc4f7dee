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

#include "msa/channel.hpp"
#include "msa/reflection.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace msa;
using cd = std::complex<double>;
using Path = PathComponent<double>;

namespace
{
    constexpr double fc = 5.8e9;

    Direction<double> random_direction(Rng &rng)
    {
        std::uniform_real_distribution<double> th(0.0, 1.4), ph(0.0, 6.28);
        return Direction<double>::make(th(rng), ph(rng));
    }
} // namespace

TEST_CASE("selection vector on and off the lattice", "[channel]")
{
    const auto grid = DirectionGrid<double>::hemisphere(8, 16);
    const auto on = selection_vector(grid, grid[37]);
    CHECK(on(37) == 1.0);
    CHECK(on.cwiseAbs().sum() == 1.0);

    Rng rng(1);
    for (int t = 0; t < 200; ++t)
    {
        const auto v = selection_vector(grid, random_direction(rng));
        CHECK(std::abs(v.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("explicit grids snap with a diagnostic", "[channel]")
{
    const DirectionGrid<double> grid({{0.1, 0.0}, {0.8, 1.0}, {1.2, 4.0}});
    Diagnostics diag;
    const auto v = selection_vector(grid, Direction<double>::make(0.75, 1.1), &diag);
    CHECK(v(1) == 1.0);
    CHECK(v.sum() == 1.0);
    CHECK(diag.size() == 1);
    diag.clear();
    selection_vector(grid, grid[2], &diag);
    CHECK(diag.empty());
}

TEST_CASE("single path to a single antenna", "[channel]")
{
    const auto grid = DirectionGrid<double>::hemisphere(4, 8);
    const auto rx = TerminalArray<double>::ula(1);
    const std::vector<Path> paths{{{1.0, 0.0}, 0.0, grid[5], {0.3, 0.0}}};
    const auto H = channel_surface_to_rx<double>(paths, grid, rx, fc);
    const auto v = selection_vector(grid, grid[5]);
    REQUIRE(H.rows() == 1);
    CHECK((H.row(0).transpose() - v.cast<cd>()).norm() < 1e-15);
}

TEST_CASE("half-wavelength delay cancels", "[channel]")
{
    const auto grid = DirectionGrid<double>::hemisphere(4, 8);
    const auto rx = TerminalArray<double>::ula(2);
    const double tau = 3.7e-9;
    const std::vector<Path> paths{{{1.0, 0.0}, tau, {0.4, 1.0}, {0.2, 0.5}}, {{1.0, 0.0}, tau + 1.0 / (2.0 * fc), {0.4, 1.0}, {0.2, 0.5}}};
    const auto H = channel_surface_to_rx<double>(paths, grid, rx, fc);
    CHECK(H.norm() < 1e-9);
}

TEST_CASE("single incoming path to a single tx antenna", "[channel]")
{
    const auto grid = DirectionGrid<double>::hemisphere(4, 8);
    const auto tx = TerminalArray<double>::ula(1);
    const Path p{{0.5, -0.2}, 1e-9, {0.6, 2.0}, {0.1, 0.0}};
    const auto H = channel_tx_to_surface<double>(std::vector<Path>{p}, grid, tx, fc);
    const auto v = selection_vector(grid, p.at_surface);
    const cd g = p.gain * std::polar(1.0, -2.0 * pi<double> * fc * p.delay_s);
    CHECK((H.col(0) - g * v.cast<cd>()).norm() < 1e-14);
    CHECK(channel_tx_to_surface<double>(std::vector<Path>{}, grid, tx, fc).norm() == 0.0);
    CHECK(channel_surface_to_rx<double>(std::vector<Path>{}, grid, TerminalArray<double>::ula(3), fc).norm() == 0.0);
}

TEST_CASE("channel synthesis is additive over paths", "[channel][property]")
{
    Rng rng(4);
    const auto grid = DirectionGrid<double>::hemisphere(6, 10);
    const auto rx = TerminalArray<double>::ula(3);
    const auto tx = TerminalArray<double>::ula(2);
    std::vector<Path> paths;
    std::uniform_real_distribution<double> d(0.0, 1e-8);
    for (int l = 0; l < 5; ++l)
    {
        const cd g = complex_gaussian<double>(1, 1, 1.0, rng)(0, 0);
        paths.push_back({g, d(rng), random_direction(rng), random_direction(rng)});
    }
    CMatrix<double> sum_rx = CMatrix<double>::Zero(3, grid.size());
    CMatrix<double> sum_tx = CMatrix<double>::Zero(grid.size(), 2);
    for (const auto &p : paths)
    {
        sum_rx += channel_surface_to_rx<double>(std::vector<Path>{p}, grid, rx, fc);
        sum_tx += channel_tx_to_surface<double>(std::vector<Path>{p}, grid, tx, fc);
    }
    const auto all_rx = channel_surface_to_rx<double>(paths, grid, rx, fc);
    const auto all_tx = channel_tx_to_surface<double>(paths, grid, tx, fc);
    CHECK((all_rx - sum_rx).norm() <= 1e-12 * all_rx.norm());
    CHECK((all_tx - sum_tx).norm() <= 1e-12 * all_tx.norm());
}

TEST_CASE("effective channels", "[channel]")
{
    Rng rng(8);
    const Eigen::Index K = 6, N_t = 3, N_r = 2;
    const CMatrix<double> Htx = complex_gaussian<double>(K, N_t, 1.0, rng);
    const CMatrix<double> Hrx = complex_gaussian<double>(N_r, K, 1.0, rng);
    const CMatrix<double> I = CMatrix<double>::Identity(K, K);
    CVector<double> e1 = CVector<double>::Zero(N_t);
    e1(0) = 1.0;
    const auto eff = effective_channels(I, Htx, Hrx, e1);
    CHECK((eff.H_i - Htx).norm() == 0.0);
    CHECK((eff.H_o - Hrx).norm() == 0.0);
    CHECK((eff.h_eff - eff.H_i.col(0)).norm() == 0.0);

    // linear in each channel matrix
    const CMatrix<double> W = complex_gaussian<double>(K, K, 1.0, rng);
    const CMatrix<double> Htx2 = complex_gaussian<double>(K, N_t, 1.0, rng);
    const CVector<double> w = complex_gaussian<double>(N_t, 1, 1.0, rng);
    const cd c(2.0, -0.5);
    const auto a = effective_channels(W, CMatrix<double>(c * Htx + Htx2), Hrx, w);
    const auto b1 = effective_channels(W, Htx, Hrx, w);
    const auto b2 = effective_channels(W, Htx2, Hrx, w);
    CHECK((a.H_i - (c * b1.H_i + b2.H_i)).norm() <= 1e-12 * a.H_i.norm());
    CHECK((a.h_eff - (c * b1.h_eff + b2.h_eff)).norm() <= 1e-12 * a.h_eff.norm());
    const CMatrix<double> Hrx2 = complex_gaussian<double>(N_r, K, 1.0, rng);
    const auto o = effective_channels(W, Htx, CMatrix<double>(c * Hrx + Hrx2), w);
    const auto o2 = effective_channels(W, Htx, Hrx2, w);
    CHECK((o.H_o - (c * b1.H_o + o2.H_o)).norm() <= 1e-12 * o.H_o.norm());

    CHECK_THROWS_AS(effective_channels(W, Htx, Hrx, CVector<double>(CVector<double>::Ones(2))), DimensionError);
}

TEST_CASE("single path on both sides gives the closed rank-one product", "[channel]")
{
    const auto geom = ArrayGeometry<double>::make(3, 3, 0.5, 1.0);
    const auto grid = DirectionGrid<double>::hemisphere(6, 12);
    const auto pattern = ElementPattern<double>::sample(CosinePattern<double>{1.0}, grid);
    const auto W = transform_matrix(phase_difference_matrix(geom, grid), pattern);
    const auto rx = TerminalArray<double>::ula(2);
    const auto tx = TerminalArray<double>::ula(3);
    const Eigen::Index mo = 17, mi = 40;
    const Path out{{0.7, 0.2}, 2e-9, grid[mo], {0.4, 0.3}};
    const Path in{{-0.3, 0.9}, 5e-9, grid[mi], {0.2, 1.3}};
    const auto Hrx = channel_surface_to_rx<double>(std::vector<Path>{out}, grid, rx, fc);
    const auto Htx = channel_tx_to_surface<double>(std::vector<Path>{in}, grid, tx, fc);
    const auto eff = effective_channels(W, Htx, Hrx, CVector<double>(CVector<double>::Ones(3)));

    Rng rng(2);
    const CVector<double> phi = random_phasors<double>(9, rng);
    const CMatrix<double> G = eff.H_o * phi.asDiagonal() * eff.H_i;

    const auto pos = element_positions(geom);
    const CVector<double> a_o = steering_vector(pos, grid[mo]);
    const CVector<double> a_i = steering_vector(pos, grid[mi]);
    const cd scalar = std::conj(pattern.values()(mo)) * pattern.values()(mi) * out.gain * in.gain *
                      std::polar(1.0, -2.0 * pi<double> * fc * (out.delay_s + in.delay_s)) *
                      (a_o.adjoint() * phi.asDiagonal() * a_i)(0);
    const CMatrix<double> ref = scalar * array_response(rx, out.at_terminal) * array_response(tx, in.at_terminal).transpose();
    CHECK((G - ref).norm() <= 1e-12 * ref.norm());
    Eigen::JacobiSVD<CMatrix<double>> svd(G);
    CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));
}

TEST_CASE("noise injection", "[channel]")
{
    Rng rng(6);
    const CMatrix<double> y = complex_gaussian<double>(2, 500, 1.0, rng);
    CHECK(add_noise(y, 0.0, 3) == y);
    CHECK(add_noise(y, 0.1, 3) == add_noise(y, 0.1, 3));
    CHECK(add_noise(y, 0.1, 3) != add_noise(y, 0.1, 4));
    CHECK_THROWS_AS(add_noise(y, -1.0, 3), DomainError);
    const CMatrix<double> n = add_noise(CMatrix<double>(CMatrix<double>::Zero(4, 20000)), 0.5, 9);
    CHECK(std::abs(n.cwiseAbs2().mean() - 0.5) < 0.02);
    CHECK(std::abs(n.mean()) < 0.02);
}

TEST_CASE("path validation", "[channel]")
{
    Path p{{1.0, 0.0}, -1e-9, {0.1, 0.1}, {0.1, 0.1}};
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.delay_s = 0.0;
    p.gain = {std::nan(""), 0.0};
    CHECK_THROWS_AS(p.validate(), DomainError);
    CHECK_THROWS_AS(TerminalArray<double>::ula(0), DomainError);
}

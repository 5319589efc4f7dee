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

#include "msa/precoder.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace msa;
using cd = std::complex<double>;
using CV = CVector<double>;
using CM = CMatrix<double>;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    TwoStreamChannels<double> random_channels(Eigen::Index half, Eigen::Index rx, std::uint64_t seed, double sigma2 = 0.1)
    {
        Rng rng(seed);
        TwoStreamChannels<double> ch;
        ch.b1 = complex_gaussian<double>(rx, half, 1.0, rng);
        ch.b2 = complex_gaussian<double>(rx, half, 1.0, rng);
        ch.c1 = complex_gaussian<double>(rx, half, 1.0, rng);
        ch.c2 = complex_gaussian<double>(rx, half, 1.0, rng);
        ch.sigma2 = sigma2;
        return ch;
    }

    double oracle_sum_sinr(const CV &p1, const CV &p2, const TwoStreamChannels<double> &ch)
    {
        const CV ones1 = CV::Ones(p1.size());
        const double s1 = oracle::received_power(ch.b1, p1, ones1);
        const double i1 = oracle::received_power(ch.b2, p2, ones1);
        const double s2 = oracle::received_power(ch.c2, p2, ones1);
        const double i2 = oracle::received_power(ch.c1, p1, ones1);
        return s1 / (i1 + ch.sigma2) + s2 / (i2 + ch.sigma2);
    }
} // namespace

TEST_CASE("single element aligns fully", "[precoder]")
{
    CM H(1, 1);
    H << cd(0.3, -1.2);
    CV h(1);
    h << cd(-0.7, 0.4);
    const auto sol = closed_form_phases(H, h);
    const cd y = H(0, 0) * sol.phases[0](0) * h(0);
    CHECK_THAT(std::abs(y), WithinRel(std::abs(H(0, 0)) * std::abs(h(0)), 1e-14));
    CHECK_THAT(std::abs(y.imag()) + 0.0, WithinAbs(0.0, 1e-14 + std::abs(y) * 1.0));
}

TEST_CASE("closed form is optimal for rank-one channels", "[precoder]")
{
    Rng rng(17);
    for (int t = 0; t < 50; ++t)
    {
        const CV a = complex_gaussian<double>(3, 1, 1.0, rng);
        const CV b = complex_gaussian<double>(8, 1, 1.0, rng);
        const CM H = a * b.transpose();
        const CV h = complex_gaussian<double>(8, 1, 1.0, rng);
        const auto sol = closed_form_phases(H, h);
        CHECK(sol.objective <= sol.upper_bound * (1 + 1e-12));
        CHECK_THAT(sol.objective, WithinRel(oracle::received_power(H, sol.phases[0], h), 1e-12));
        // co-phasing every b_i h_i is the optimum: ||a||^2 (sum |b_i h_i|)^2
        const double direct = std::pow((b.cwiseAbs().array() * h.cwiseAbs().array()).sum(), 2) * a.squaredNorm();
        CHECK_THAT(sol.objective, WithinRel(direct, 1e-12));
    }
}

TEST_CASE("closed form never exceeds the dominant-mode bound", "[precoder][property]")
{
    Rng rng(5);
    for (int t = 0; t < 200; ++t)
    {
        const CM H = complex_gaussian<double>(3, 10, 1.0, rng);
        const CV h = complex_gaussian<double>(10, 1, 0.1, rng);
        const auto sol = closed_form_phases(H, h);
        CHECK(sol.objective <= sol.upper_bound * (1 + 1e-12));
        CHECK(((sol.phases[0].cwiseAbs().array() - 1.0).abs() < 1e-14).all());
        const CV rnd = random_phasors<double>(10, rng);
        CHECK(received_power(H, rnd, h) <= sol.upper_bound * (1 + 1e-12));

        const auto refined = refine_phases(H, h, sol);
        CHECK(refined.objective >= sol.objective);
        for (size_t i = 1; i < refined.objective_trace.size(); ++i)
            CHECK(refined.objective_trace[i] >= refined.objective_trace[i - 1]);
    }
}

TEST_CASE("closed form edge cases", "[precoder]")
{
    CM H = CM::Ones(1, 3);
    CV h(3);
    h << cd(1, 0), cd(0, 0), cd(0, 2);
    const auto sol = closed_form_phases(H, h);
    CHECK(sol.phases[0](1) == cd(1, 0));
    CHECK_THROWS_AS(closed_form_phases(CM(CM::Zero(2, 3)), h), DegenerateError);
    CHECK_THROWS_AS(closed_form_phases(H, CV(CV::Zero(3))), DegenerateError);
    CHECK_THROWS_AS(closed_form_phases(H, CV(CV::Ones(4))), DimensionError);
}

TEST_CASE("sum SINR without cross channels", "[precoder]")
{
    auto ch = random_channels(5, 1, 3, 0.4);
    ch.b2.setZero();
    ch.c1.setZero();
    Rng rng(1);
    const CV p1 = random_phasors<double>(5, rng), p2 = random_phasors<double>(5, rng);
    const double expect = std::norm((ch.b1 * p1)(0)) / 0.4 + std::norm((ch.c2 * p2)(0)) / 0.4;
    CHECK_THAT(sum_sinr(p1, p2, ch), WithinRel(expect, 1e-14));
}

TEST_CASE("gradient matches finite differences", "[precoder][property]")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (Eigen::Index rx : {1, 2})
        {
            const auto ch = random_channels(6, rx, seed, 0.3);
            Rng rng(seed + 100);
            // off the manifold on purpose: the gradient is of the unconstrained objective
            const CV p1 = complex_gaussian<double>(6, 1, 1.0, rng), p2 = complex_gaussian<double>(6, 1, 1.0, rng);
            const auto g1 = euclidean_gradient_phi1(p1, p2, ch);
            const auto g2 = euclidean_gradient_phi2(p1, p2, ch);
            const auto fd1 = oracle::fd_gradient([&](const Eigen::VectorXcd &z) { return oracle_sum_sinr(z, p2, ch); }, p1);
            const auto fd2 = oracle::fd_gradient([&](const Eigen::VectorXcd &z) { return oracle_sum_sinr(p1, z, ch); }, p2);
            CHECK((g1 - fd1).norm() <= 1e-5 * g1.norm());
            CHECK((g2 - fd2).norm() <= 1e-5 * g2.norm());
        }
}

TEST_CASE("zero desired and cross channel on stream one gives zero gradient", "[precoder]")
{
    auto ch = random_channels(4, 1, 9);
    ch.b1.setZero();
    ch.c1.setZero();
    Rng rng(2);
    const CV p1 = random_phasors<double>(4, rng), p2 = random_phasors<double>(4, rng);
    CHECK(euclidean_gradient_phi1(p1, p2, ch).norm() == 0.0);
}

TEST_CASE("projection and retraction", "[precoder]")
{
    Rng rng(4);
    for (int t = 0; t < 100; ++t)
    {
        const CV phi = random_phasors<double>(7, rng);
        const CV g = complex_gaussian<double>(7, 1, 1.0, rng);
        const CV r = riemannian_project(g, phi);
        CHECK((r.array() * phi.array().conjugate()).real().abs().maxCoeff() < 1e-14);
        CHECK((riemannian_project(r, phi) - r).norm() < 1e-14);
    }
    CHECK_THROWS_AS(riemannian_project(CV(CV::Ones(2)), CV(CV::Constant(2, cd(2.0)))), DomainError);

    const CV unit = random_phasors<double>(5, rng);
    CHECK((retract(unit) - unit).norm() < 1e-15);
    CV two(1);
    two << std::polar(2.0, 0.9);
    CHECK(std::abs(retract(two)(0) - std::polar(1.0, 0.9)) < 1e-15);
    CV hole = unit;
    hole(3) = 0.0;
    CHECK_THROWS_AS(retract(hole), RetractionError);
}

TEST_CASE("alternating optimization is monotone and stays on the manifold", "[precoder][property]")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const auto ch = random_channels(8, 1, seed, 0.05);
        AlternatingOptions<double> opt;
        opt.seed = seed;
        opt.check_invariants = true;
        opt.restarts = 3;
        const auto sol = alternating_optimize(ch, opt);
        for (size_t i = 1; i < sol.objective_trace.size(); ++i)
            CHECK(sol.objective_trace[i] >= sol.objective_trace[i - 1]);
        CHECK(sol.objective == sol.objective_trace.back());
        CHECK_THAT(sol.objective, WithinRel(oracle_sum_sinr(sol.phases[0], sol.phases[1], ch), 1e-12));
        CHECK(sol.iterations <= opt.max_iter);
        // the optimizer must not lose to its own closed-form start
        const double start = sum_sinr(detail::stream_alignment(ch.b1), detail::stream_alignment(ch.c2), ch);
        CHECK(sol.objective >= start);
    }
}

TEST_CASE("alternating optimization without cross channels matches per-stream optima", "[precoder]")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        auto ch = random_channels(8, 1, seed, 0.2);
        ch.b2.setZero();
        ch.c1.setZero();
        AlternatingOptions<double> opt;
        opt.seed = seed;
        opt.restarts = 1;
        Rng rng(seed);
        const auto init = std::make_pair(CV(random_phasors<double>(8, rng)), CV(random_phasors<double>(8, rng)));
        const auto sol = alternating_optimize<double>(ch, opt, init);
        const double expect = (std::pow(ch.b1.cwiseAbs().sum(), 2) + std::pow(ch.c2.cwiseAbs().sum(), 2)) / 0.2;
        CHECK(10 * std::log10(expect / sol.objective) < 0.1);
    }
}

TEST_CASE("null steering start", "[precoder]")
{
    Rng rng(8);
    const CM B = complex_gaussian<double>(1, 6, 1.0, rng);
    const CM C = complex_gaussian<double>(1, 6, 1.0, rng);
    const CV x = detail::null_steering(B, C);
    CHECK(((x.cwiseAbs().array() - 1.0).abs() < 1e-14).all());
    // a full-rank square interference channel leaves no null space: falls back to co-phasing
    const CM Cfull = complex_gaussian<double>(6, 6, 1.0, rng);
    CHECK((detail::null_steering(B, Cfull) - detail::stream_alignment(B)).norm() < 1e-14);
}

TEST_CASE("palette quantization", "[precoder]")
{
    PhaseSolution<double> s;
    Rng rng(1);
    s.phases = {random_phasors<double>(9, rng)};
    const auto zero = quantize_phases(s, {0.0});
    CHECK((zero.phases[0] - CV::Ones(9)).norm() < 1e-15);
    CHECK(zero.quantized);

    s.phases = {CV::Constant(1, std::polar(1.0, 0.5))};
    const auto tie = quantize_phases(s, {0.0, 1.0});
    CHECK(std::abs(tie.phases[0](0) - cd(1.0, 0.0)) < 1e-15);
    const auto tie2 = quantize_phases(s, {1.0, 0.0});
    CHECK(std::abs(tie2.phases[0](0) - std::polar(1.0, 1.0)) < 1e-15);

    s.phases = {CV::Constant(1, std::polar(1.0, 3.0))};
    const auto wrap = quantize_phases(s, {-3.0, 2.0});
    CHECK(std::abs(wrap.phases[0](0) - std::polar(1.0, -3.0)) < 1e-15);
    CHECK_THROWS_AS(quantize_phases(s, {}), DomainError);

    const auto with_obj = quantize_phases<double>(s, {0.0}, [](const std::vector<CV> &p) { return p[0](0).real(); });
    CHECK(with_obj.objective == 1.0);
}

TEST_CASE("exhaustive oracle", "[precoder]")
{
    const double a = 1.0;
    const auto align = [&](const CV &p) { return std::norm(1.0 + p(0) * std::polar(1.0, -a)); };
    const auto r = exhaustive_phase_oracle<double>(align, 1, 4);
    CHECK(std::abs(std::arg(r.phases(0)) - pi<double> / 2) < 1e-12);
    CHECK(r.evaluations == 4);

    const auto sym = [&](const CV &p) { return -std::norm(p(0) - std::polar(1.0, a)) - std::norm(p(1) - std::polar(1.0, a)); };
    const auto s = exhaustive_phase_oracle<double>(sym, 2, 8);
    CHECK(std::abs(s.phases(0) - s.phases(1)) < 1e-15);

    Rng rng(2);
    const CM H = complex_gaussian<double>(2, 3, 1.0, rng);
    const CV h = complex_gaussian<double>(3, 1, 1.0, rng);
    const auto f = [&](const CV &p) { return received_power(H, p, h); };
    const auto lib = exhaustive_phase_oracle<double>(f, 3, 8);
    const double ref = oracle::exhaustive([&](const Eigen::VectorXcd &p) { return oracle::received_power(H, p, h); }, 3, 8);
    CHECK_THAT(lib.value, WithinRel(ref, 1e-12));
    CHECK_THROWS_AS(exhaustive_phase_oracle<double>(f, 30, 32), BudgetError);
}

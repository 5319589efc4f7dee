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

// Phase-only precoding on the complex circle manifold {phi : |phi_i| = 1}.
//
// Single stream: maximize ||H_o diag(phi) h_eff||^2 in closed form by phase-matching diag(phi) h_eff
// to the dominant right singular vector of H_o.
//
// Two streams on two sub-surfaces: maximize the sum SINR
//
//     f(phi1, phi2) = ||B1 phi1||^2 / (||B2 phi2||^2 + s2) + ||C2 phi2||^2 / (||C1 phi1||^2 + s2)
//
// by alternating Riemannian gradient ascent with Armijo backtracking and elementwise retraction.
// Each of B1, B2, C1, C2 has one row per receive antenna; the single-antenna case is a 1-row matrix
// holding b^T, which is the quadratic form |b^T phi|^2.

#pragma once

#include "msa/errors.hpp"
#include "msa/types.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace msa
{
    template <typename Real = double>
    struct PhaseSolution
    {
        std::vector<CVector<Real>> phases;  // one unit-modulus vector per stream
        std::vector<Real> objective_trace;  // objective after initialization and after every outer iteration
        Real objective = Real(0);           // final objective value
        Real upper_bound = std::numeric_limits<Real>::quiet_NaN(); // sigma_1^2 ||h_eff||^2 for single-stream power
        int iterations = 0;
        bool converged = true;
        bool quantized = false;
        std::optional<std::vector<Real>> palette;

        // Phases as angles in (-pi, pi], streams concatenated
        RVector<Real> angles() const
        {
            Eigen::Index n = 0;
            for (const auto &p : phases)
                n += p.size();
            RVector<Real> out(n);
            Eigen::Index k = 0;
            for (const auto &p : phases)
                for (Eigen::Index i = 0; i < p.size(); ++i)
                    out(k++) = std::arg(p(i));
            return out;
        }
    };

    // ||H_o diag(phi) h_eff||^2
    template <typename Real>
    Real received_power(const CMatrix<Real> &H_o, const CVector<Real> &phi, const CVector<Real> &h_eff)
    {
        require_dims(H_o.cols() == phi.size() && phi.size() == h_eff.size(), "received_power: dimension mismatch");
        return (H_o * (phi.array() * h_eff.array()).matrix()).squaredNorm();
    }

    // phi_i = arg(v1_i) - arg(h_eff_i); elements with h_eff_i = 0 get phase 0.
    //
    // Optimal when H_o has rank one. For N_r > 1 it is a heuristic; upper_bound carries
    // sigma_1^2 ||h_eff||^2 for comparison.
    template <typename Real>
    PhaseSolution<Real> closed_form_phases(const CMatrix<Real> &H_o, const CVector<Real> &h_eff)
    {
        require_dims(H_o.cols() == h_eff.size(), "closed_form_phases: H_o has " + std::to_string(H_o.cols()) +
                                                     " columns but h_eff has " + std::to_string(h_eff.size()) + " entries");
        if (H_o.size() == 0 || H_o.cwiseAbs().maxCoeff() == Real(0) || h_eff.cwiseAbs().maxCoeff() == Real(0))
            throw DegenerateError("closed_form_phases: all-zero channel");

        Eigen::JacobiSVD<CMatrix<Real>> svd(H_o, Eigen::ComputeThinV);
        const CVector<Real> v1 = svd.matrixV().col(0);
        const Real sigma1 = svd.singularValues()(0);

        CVector<Real> phi(h_eff.size());
        for (Eigen::Index i = 0; i < h_eff.size(); ++i)
        {
            const Real angle = h_eff(i) == Complex<Real>(0) ? Real(0) : std::arg(v1(i)) - std::arg(h_eff(i));
            phi(i) = std::polar(Real(1), angle);
        }

        PhaseSolution<Real> sol;
        sol.objective = received_power(H_o, phi, h_eff);
        sol.upper_bound = sigma1 * sigma1 * h_eff.squaredNorm();
        sol.objective_trace = {sol.objective};
        sol.phases = {std::move(phi)};
        return sol;
    }

    // Monotone fixed-point ascent of ||H_o diag(phi) h||^2 started from `start`:
    // phi_i <- exp(j arg((H_o^H y)_i conj(h_i))) with y = H_o diag(phi) h. Optional polish after the
    // closed form; never used implicitly.
    template <typename Real>
    PhaseSolution<Real> refine_phases(const CMatrix<Real> &H_o, const CVector<Real> &h_eff, const PhaseSolution<Real> &start,
                                      int max_iter = 200, Real tol = Real(1e-10))
    {
        require_dims(start.phases.size() == 1 && start.phases[0].size() == h_eff.size(), "refine_phases: start has wrong shape");
        PhaseSolution<Real> sol = start;
        CVector<Real> phi = start.phases[0];
        Real value = received_power(H_o, phi, h_eff);
        sol.objective_trace = {value};
        sol.converged = false;
        for (int it = 0; it < max_iter; ++it)
        {
            const CVector<Real> y = H_o * (phi.array() * h_eff.array()).matrix();
            const CVector<Real> back = (H_o.adjoint() * y).array() * h_eff.array().conjugate();
            CVector<Real> next = phi;
            for (Eigen::Index i = 0; i < phi.size(); ++i)
                if (std::abs(back(i)) > Real(0))
                    next(i) = back(i) / std::abs(back(i));
            const Real next_value = received_power(H_o, next, h_eff);
            sol.iterations = it + 1;
            if (next_value < value)
                break;
            const Real gain = next_value - value;
            phi = next;
            value = next_value;
            sol.objective_trace.push_back(value);
            if (gain <= tol * value)
            {
                sol.converged = true;
                break;
            }
        }
        sol.phases = {phi};
        sol.objective = value;
        return sol;
    }

    // Channels of the two-stream problem; row count = receive antennas per receiver
    template <typename Real = double>
    struct TwoStreamChannels
    {
        CMatrix<Real> b1; // rx1 <- sub-surface 1 (desired)
        CMatrix<Real> b2; // rx1 <- sub-surface 2 (interference)
        CMatrix<Real> c1; // rx2 <- sub-surface 1 (interference)
        CMatrix<Real> c2; // rx2 <- sub-surface 2 (desired)
        Real sigma2 = Real(1);

        Eigen::Index half() const { return b1.cols(); }

        void validate() const
        {
            const Eigen::Index n = b1.cols();
            require_dims(b2.cols() == n && c1.cols() == n && c2.cols() == n, "two-stream channel vectors must have equal length");
            require_dims(b1.rows() == b2.rows() && c1.rows() == c2.rows(), "two-stream channels disagree on receive antennas");
            if (!(sigma2 > Real(0)))
                throw DomainError("two-stream noise power must be positive");
        }

        // b1^T = H_o^{11} diag(h1), b2^T = H_o^{12} diag(h2), c1^T = H_o^{21} diag(h1), c2^T = H_o^{22} diag(h2)
        static TwoStreamChannels from_blocks(const CMatrix<Real> &H11, const CMatrix<Real> &H12, const CMatrix<Real> &H21,
                                             const CMatrix<Real> &H22, const CVector<Real> &h1, const CVector<Real> &h2,
                                             Real sigma2)
        {
            TwoStreamChannels ch;
            ch.b1 = H11 * h1.asDiagonal();
            ch.b2 = H12 * h2.asDiagonal();
            ch.c1 = H21 * h1.asDiagonal();
            ch.c2 = H22 * h2.asDiagonal();
            ch.sigma2 = sigma2;
            ch.validate();
            return ch;
        }

        // Same problem seen from stream 2: (b <-> c, phi1 <-> phi2)
        TwoStreamChannels mirrored() const { return TwoStreamChannels{c2, c1, b2, b1, sigma2}; }
    };

    template <typename Real>
    struct StreamSinr
    {
        Real sinr1;
        Real sinr2;
    };

    template <typename Real>
    StreamSinr<Real> stream_sinr(const CVector<Real> &phi1, const CVector<Real> &phi2, const TwoStreamChannels<Real> &ch)
    {
        ch.validate();
        require_dims(phi1.size() == ch.half() && phi2.size() == ch.half(), "phase vectors must have the sub-surface length");
        const Real s1 = (ch.b1 * phi1).squaredNorm() / ((ch.b2 * phi2).squaredNorm() + ch.sigma2);
        const Real s2 = (ch.c2 * phi2).squaredNorm() / ((ch.c1 * phi1).squaredNorm() + ch.sigma2);
        return {s1, s2};
    }

    template <typename Real>
    Real sum_sinr(const CVector<Real> &phi1, const CVector<Real> &phi2, const TwoStreamChannels<Real> &ch)
    {
        const auto s = stream_sinr(phi1, phi2, ch);
        return s.sinr1 + s.sinr2;
    }

    // Euclidean (conjugate Wirtinger, times two) gradient of f with respect to phi1, phi2 fixed:
    // (2 / C2) B1^H B1 phi1 - (2 C2' / (v + s2)^2) C1^H C1 phi1,
    // C2 = ||B2 phi2||^2 + s2, C2' = ||C2 phi2||^2, v = ||C1 phi1||^2.
    template <typename Real>
    CVector<Real> euclidean_gradient_phi1(const CVector<Real> &phi1, const CVector<Real> &phi2, const TwoStreamChannels<Real> &ch)
    {
        ch.validate();
        const Real C2 = (ch.b2 * phi2).squaredNorm() + ch.sigma2;
        const Real C2p = (ch.c2 * phi2).squaredNorm();
        const CVector<Real> c1phi = ch.c1 * phi1;
        const Real v = c1phi.squaredNorm();
        const Real denom = (v + ch.sigma2) * (v + ch.sigma2);
        return (Real(2) / C2) * (ch.b1.adjoint() * (ch.b1 * phi1)) - (Real(2) * C2p / denom) * (ch.c1.adjoint() * c1phi);
    }

    template <typename Real>
    CVector<Real> euclidean_gradient_phi2(const CVector<Real> &phi1, const CVector<Real> &phi2, const TwoStreamChannels<Real> &ch)
    {
        return euclidean_gradient_phi1(phi2, phi1, ch.mirrored());
    }

    // Tangent-space projection at phi: grad - Re{grad o conj(phi)} o phi
    template <typename Real>
    CVector<Real> riemannian_project(const CVector<Real> &grad, const CVector<Real> &phi, Real unit_tol = Real(1e-8))
    {
        require_dims(grad.size() == phi.size(), "riemannian_project: size mismatch");
        for (Eigen::Index i = 0; i < phi.size(); ++i)
            if (std::abs(std::abs(phi(i)) - Real(1)) > unit_tol)
                throw DomainError("riemannian_project: phi entry " + std::to_string(i) + " is not unit-modulus");
        const RVector<Real> radial = (grad.array() * phi.array().conjugate()).real();
        return grad - (radial.template cast<Complex<Real>>().array() * phi.array()).matrix();
    }

    // Elementwise normalization back onto the manifold
    template <typename Real>
    CVector<Real> retract(const CVector<Real> &phi)
    {
        CVector<Real> out(phi.size());
        for (Eigen::Index i = 0; i < phi.size(); ++i)
        {
            const Real r = std::abs(phi(i));
            if (!(r > Real(0)))
                throw RetractionError("retract: element " + std::to_string(i) + " is zero");
            out(i) = phi(i) / r;
        }
        return out;
    }

    template <typename Real = double>
    struct ArmijoPolicy
    {
        Real initial_step = Real(1);
        Real shrink = Real(0.5);
        Real sufficient_increase = Real(1e-4);
        int max_halvings = 60;
    };

    template <typename Real = double>
    struct AlternatingOptions
    {
        ArmijoPolicy<Real> step;
        Real tol = Real(1e-6); // relative improvement over one outer iteration
        int max_iter = 500;
        int inner_steps = 1;   // ascent steps per sub-problem per outer iteration
        int restarts = 8;      // starts: per-stream closed form, zero-forcing, then seeded random phases
        std::uint64_t seed = 1;
        bool check_invariants = false; // assert tangency and unit modulus at every step
    };

    namespace detail
    {
        // One Armijo-backtracked Riemannian ascent step on `phi` for the objective `f`
        template <typename Real, typename Objective>
        CVector<Real> ascent_step(const CVector<Real> &phi, const CVector<Real> &egrad, const Objective &f, Real f0,
                                  const ArmijoPolicy<Real> &policy, bool check)
        {
            const CVector<Real> rgrad = riemannian_project(egrad, phi);
            if (check)
            {
                const Real tangency = (rgrad.array() * phi.array().conjugate()).real().abs().maxCoeff();
                if (tangency > Real(1e-8) * std::max(Real(1), rgrad.cwiseAbs().maxCoeff()))
                    throw Error("alternating_optimize: projected gradient is not tangent");
            }
            const Real slope = rgrad.squaredNorm();
            if (!(slope > Real(0)))
                return phi;
            Real eta = policy.initial_step;
            for (int h = 0; h <= policy.max_halvings; ++h, eta *= policy.shrink)
            {
                CVector<Real> trial = phi + eta * rgrad;
                if (trial.cwiseAbs().minCoeff() == Real(0))
                    continue;
                trial = retract(trial);
                if (f(trial) >= f0 + policy.sufficient_increase * eta * slope)
                    return trial;
            }
            return phi;
        }

        template <typename Real>
        PhaseSolution<Real> alternating_single_start(const TwoStreamChannels<Real> &ch, CVector<Real> phi1, CVector<Real> phi2,
                                                     const AlternatingOptions<Real> &opt)
        {
            PhaseSolution<Real> sol;
            Real value = sum_sinr(phi1, phi2, ch);
            sol.objective_trace.push_back(value);
            sol.converged = false;
            for (int it = 0; it < opt.max_iter; ++it)
            {
                const Real start_value = value;
                for (int s = 0; s < opt.inner_steps; ++s)
                {
                    auto f1 = [&](const CVector<Real> &p) { return sum_sinr(p, phi2, ch); };
                    phi1 = ascent_step(phi1, euclidean_gradient_phi1(phi1, phi2, ch), f1, value, opt.step, opt.check_invariants);
                    value = sum_sinr(phi1, phi2, ch);
                }
                for (int s = 0; s < opt.inner_steps; ++s)
                {
                    auto f2 = [&](const CVector<Real> &p) { return sum_sinr(phi1, p, ch); };
                    phi2 = ascent_step(phi2, euclidean_gradient_phi2(phi1, phi2, ch), f2, value, opt.step, opt.check_invariants);
                    value = sum_sinr(phi1, phi2, ch);
                }
                if (opt.check_invariants)
                    for (const auto *p : {&phi1, &phi2})
                        if (((p->cwiseAbs().array() - Real(1)).abs() > Real(1e-12)).any())
                            throw Error("alternating_optimize: iterate left the manifold");
                sol.objective_trace.push_back(value);
                sol.iterations = it + 1;
                if (value - start_value < opt.tol * std::abs(start_value))
                {
                    sol.converged = true;
                    break;
                }
            }
            sol.objective = value;
            sol.phases = {std::move(phi1), std::move(phi2)};
            return sol;
        }

        // Co-phasing solution of max |b^T phi|^2 (or ||B phi||^2 via the dominant right singular vector)
        template <typename Real>
        CVector<Real> stream_alignment(const CMatrix<Real> &B)
        {
            if (B.cwiseAbs().maxCoeff() == Real(0))
                return CVector<Real>::Ones(B.cols());
            return closed_form_phases<Real>(B, CVector<Real>::Ones(B.cols())).phases[0];
        }

        // Zero-forcing start: the best unconstrained beam for B inside the null space of the interference
        // channel C, retracted onto the manifold. Falls back to stream_alignment when C has no null space.
        template <typename Real>
        CVector<Real> null_steering(const CMatrix<Real> &B, const CMatrix<Real> &C)
        {
            Eigen::JacobiSVD<CMatrix<Real>> svd(C, Eigen::ComputeFullV);
            const Real tol = std::numeric_limits<Real>::epsilon() * Real(C.cols()) *
                             (svd.singularValues().size() ? svd.singularValues()(0) : Real(0));
            Eigen::Index rank = 0;
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
                rank += svd.singularValues()(i) > tol ? 1 : 0;
            const Eigen::Index free = C.cols() - rank;
            if (free == 0)
                return stream_alignment(B);
            const CMatrix<Real> N = svd.matrixV().rightCols(free);
            const CMatrix<Real> M = B * N;
            if (M.cwiseAbs().maxCoeff() == Real(0))
                return stream_alignment(B);
            Eigen::JacobiSVD<CMatrix<Real>> inner(M, Eigen::ComputeThinV);
            CVector<Real> x = N * inner.matrixV().col(0);
            for (Eigen::Index i = 0; i < x.size(); ++i)
                x(i) = std::abs(x(i)) > Real(0) ? x(i) / std::abs(x(i)) : Complex<Real>(1);
            return x;
        }
    } // namespace detail

    // Alternating optimization of (phi1, phi2). With `init` set, only that start is used; otherwise
    // opt.restarts starts are run (per-stream closed form, then zero-forcing, then seeded random phases)
    // and the best final objective wins. The returned trace is the winner's and is non-decreasing.
    template <typename Real>
    PhaseSolution<Real> alternating_optimize(const TwoStreamChannels<Real> &ch, const AlternatingOptions<Real> &opt = {},
                                             const std::optional<std::pair<CVector<Real>, CVector<Real>>> &init = std::nullopt)
    {
        ch.validate();
        if (init)
        {
            require_dims(init->first.size() == ch.half() && init->second.size() == ch.half(), "initial phases have wrong length");
            return detail::alternating_single_start(ch, retract(init->first), retract(init->second), opt);
        }
        Rng rng(opt.seed);
        std::optional<PhaseSolution<Real>> best;
        const int starts = std::max(1, opt.restarts);
        for (int s = 0; s < starts; ++s)
        {
            CVector<Real> p1, p2;
            if (s == 0)
            {
                p1 = detail::stream_alignment(ch.b1);
                p2 = detail::stream_alignment(ch.c2);
            }
            else if (s == 1)
            {
                p1 = detail::null_steering(ch.b1, ch.c1);
                p2 = detail::null_steering(ch.c2, ch.b2);
            }
            else
            {
                p1 = random_phasors<Real>(ch.half(), rng);
                p2 = random_phasors<Real>(ch.half(), rng);
            }
            auto sol = detail::alternating_single_start(ch, std::move(p1), std::move(p2), opt);
            if (!best || sol.objective > best->objective)
                best = std::move(sol);
        }
        return *best;
    }

    // Nearest palette state by circular distance; ties go to the lower palette index.
    // With an objective, the quantized solution's objective is re-evaluated.
    template <typename Real>
    PhaseSolution<Real> quantize_phases(const PhaseSolution<Real> &solution, const std::vector<Real> &palette,
                                        const std::function<Real(const std::vector<CVector<Real>> &)> &objective = {})
    {
        if (palette.empty())
            throw DomainError("quantize_phases: empty palette");
        PhaseSolution<Real> out = solution;
        for (auto &phi : out.phases)
            for (Eigen::Index i = 0; i < phi.size(); ++i)
            {
                const Real angle = std::arg(phi(i));
                size_t best = 0;
                Real best_dist = std::numeric_limits<Real>::infinity();
                for (size_t p = 0; p < palette.size(); ++p)
                {
                    const Real d = std::abs(wrap_pi(angle - palette[p]));
                    if (d < best_dist - Real(1e-12))
                    {
                        best_dist = d;
                        best = p;
                    }
                }
                phi(i) = std::polar(Real(1), palette[best]);
            }
        out.quantized = true;
        out.palette = palette;
        if (objective)
        {
            out.objective = objective(out.phases);
            out.objective_trace.push_back(out.objective);
        }
        return out;
    }

    template <typename Real = double>
    struct ExhaustiveResult
    {
        CVector<Real> phases;
        Real value = -std::numeric_limits<Real>::infinity();
        std::uint64_t evaluations = 0;
    };

    // Global maximum of `objective` over phases {2 pi l / levels}^K (first maximizer in odometer order)
    template <typename Real, typename Objective>
    ExhaustiveResult<Real> exhaustive_phase_oracle(const Objective &objective, int K, int levels,
                                                   std::uint64_t budget = 10'000'000)
    {
        if (K < 1 || levels < 1)
            throw DomainError("exhaustive_phase_oracle: K and levels must be positive");
        double count = std::pow(double(levels), double(K));
        if (count > double(budget))
            throw BudgetError("exhaustive_phase_oracle: " + std::to_string(levels) + "^" + std::to_string(K) +
                              " evaluations exceed the budget of " + std::to_string(budget));
        std::vector<Complex<Real>> alphabet(static_cast<size_t>(levels));
        for (int l = 0; l < levels; ++l)
            alphabet[size_t(l)] = std::polar(Real(1), two_pi<Real> * Real(l) / Real(levels));

        std::vector<int> digits(static_cast<size_t>(K), 0);
        CVector<Real> phi = CVector<Real>::Constant(K, alphabet[0]);
        ExhaustiveResult<Real> best;
        while (true)
        {
            const Real v = objective(phi);
            ++best.evaluations;
            if (v > best.value)
            {
                best.value = v;
                best.phases = phi;
            }
            int pos = 0;
            while (pos < K)
            {
                if (++digits[size_t(pos)] < levels)
                {
                    phi(pos) = alphabet[size_t(digits[size_t(pos)])];
                    break;
                }
                digits[size_t(pos)] = 0;
                phi(pos) = alphabet[0];
                ++pos;
            }
            if (pos == K)
                break;
        }
        return best;
    }
} // namespace msa

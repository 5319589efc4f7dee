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

#include "msa/dsp.hpp"
#include "msa/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace msa::dsp
{
    namespace
    {
        constexpr double kPi = std::numbers::pi;
    }

    VectorXcd fft(const VectorXcd &x)
    {
        if (x.size() == 0)
            return {};
        Eigen::FFT<double> engine;
        VectorXcd X;
        engine.fwd(X, x);
        return X;
    }

    VectorXcd ifft(const VectorXcd &X)
    {
        if (X.size() == 0)
            return {};
        Eigen::FFT<double> engine;
        VectorXcd x;
        engine.inv(x, X);
        return x;
    }

    VectorXcd fft(const VectorXd &x)
    {
        return fft(VectorXcd(x.cast<std::complex<double>>()));
    }

    VectorXd window(Window kind, Eigen::Index n)
    {
        if (n < 1)
            throw DomainError("window length must be positive");
        VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double x = 2.0 * kPi * double(i) / double(n);
            switch (kind)
            {
            case Window::Hann:
                w(i) = 0.5 - 0.5 * std::cos(x);
                break;
            case Window::SqrtHann:
                w(i) = std::sqrt(0.5 - 0.5 * std::cos(x));
                break;
            case Window::Rectangular:
                w(i) = 1.0;
                break;
            case Window::BlackmanHarris:
                w(i) = 0.35875 - 0.48829 * std::cos(x) + 0.14128 * std::cos(2 * x) - 0.01168 * std::cos(3 * x);
                break;
            }
        }
        return w;
    }

    bool is_cola(const VectorXd &w, Eigen::Index hop, double tol)
    {
        if (hop < 1 || hop > w.size())
            return false;
        VectorXd acc = VectorXd::Zero(hop);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            acc(i % hop) += w(i);
        const double mean = acc.mean();
        if (!(mean > 0))
            return false;
        return (acc.array() - mean).abs().maxCoeff() <= tol * mean;
    }

    VectorXd lowpass_fir(double cutoff, Eigen::Index taps)
    {
        if (!(cutoff > 0 && cutoff < 0.5))
            throw DomainError("lowpass cutoff must lie in (0, 0.5) cycles/sample");
        if (taps < 3 || taps % 2 == 0)
            throw DomainError("lowpass tap count must be odd and at least 3");
        VectorXd h(taps);
        const double mid = double(taps - 1) / 2.0;
        for (Eigen::Index i = 0; i < taps; ++i)
        {
            const double t = double(i) - mid;
            const double ideal = t == 0.0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * t) / (kPi * t);
            const double x = 2.0 * kPi * double(i) / double(taps - 1);
            const double blackman = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2 * x);
            h(i) = ideal * blackman;
        }
        return h / h.sum();
    }

    VectorXcd filter_same(const VectorXcd &x, const VectorXd &h)
    {
        const Eigen::Index n = x.size();
        const Eigen::Index half = (h.size() - 1) / 2;
        VectorXcd y = VectorXcd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            std::complex<double> acc = 0.0;
            const Eigen::Index lo = std::max<Eigen::Index>(0, i + half - (h.size() - 1));
            const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
            for (Eigen::Index k = lo; k <= hi; ++k)
                acc += h(i + half - k) * x(k);
            y(i) = acc;
        }
        return y;
    }

    PowerSpectrum welch(const VectorXd &x, double sample_rate_hz, Eigen::Index segment, Window kind)
    {
        if (segment < 2 || segment > x.size())
            throw DomainError("welch segment must be between 2 and the signal length");
        const VectorXd w = window(kind, segment);
        const double norm = w.squaredNorm();
        const Eigen::Index hop = segment / 2;
        const Eigen::Index bins = segment / 2 + 1;
        PowerSpectrum out;
        out.power = VectorXd::Zero(bins);
        out.frequency_hz.resize(bins);
        for (Eigen::Index k = 0; k < bins; ++k)
            out.frequency_hz(k) = sample_rate_hz * double(k) / double(segment);
        int count = 0;
        for (Eigen::Index start = 0; start + segment <= x.size(); start += hop, ++count)
        {
            const VectorXcd X = fft(VectorXd(x.segment(start, segment).cwiseProduct(w)));
            for (Eigen::Index k = 0; k < bins; ++k)
            {
                const double factor = (k == 0 || 2 * k == segment) ? 1.0 : 2.0;
                out.power(k) += factor * std::norm(X(k)) / norm;
            }
        }
        out.power /= double(count);
        return out;
    }

    std::complex<double> tone_phasor(const VectorXd &x, double sample_rate_hz, double f_hz)
    {
        if (x.size() == 0)
            throw DomainError("tone_phasor: empty record");
        std::complex<double> acc = 0.0;
        for (Eigen::Index n = 0; n < x.size(); ++n)
            acc += x(n) * std::polar(1.0, -2.0 * kPi * f_hz * double(n) / sample_rate_hz);
        const bool dc = f_hz == 0.0 || std::abs(std::fmod(2.0 * f_hz, sample_rate_hz)) == 0.0;
        return (dc ? 1.0 : 2.0) * acc / double(x.size());
    }
} // namespace msa::dsp

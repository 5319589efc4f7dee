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

#include "msa/sensing.hpp"
#include "msa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace msa
{
    namespace
    {
        constexpr double kPi = std::numbers::pi;

        Eigen::Index padding(Eigen::Index window_length, Eigen::Index hop) { return window_length - hop; }

        void check_frame_params(Eigen::Index window_length, Eigen::Index hop)
        {
            if (window_length < 2)
                throw DomainError("STFT window must have at least two samples");
            if (hop < 1 || hop > window_length)
                throw DomainError("STFT hop " + std::to_string(hop) + " must lie in [1, window length]");
        }

        // One-sided bins -> full spectrum of a real frame
        Eigen::VectorXcd full_spectrum(const Eigen::VectorXcd &half, Eigen::Index n)
        {
            Eigen::VectorXcd X(n);
            for (Eigen::Index k = 0; k < half.size(); ++k)
                X(k) = half(k);
            for (Eigen::Index k = half.size(); k < n; ++k)
                X(k) = std::conj(half(n - k));
            if (n % 2 == 0)
                X(n / 2) = X(n / 2).real();
            X(0) = X(0).real();
            return X;
        }

        Eigen::MatrixXcd analyse(const Eigen::VectorXd &x, const Eigen::VectorXd &w, Eigen::Index hop)
        {
            const Eigen::Index n = w.size();
            const Eigen::Index pad = padding(n, hop);
            const Eigen::Index frames = stft_frame_count(x.size(), n, hop);
            Eigen::VectorXd padded = Eigen::VectorXd::Zero((frames - 1) * hop + n);
            padded.segment(pad, x.size()) = x;
            Eigen::MatrixXcd X(frames, n / 2 + 1);
            for (Eigen::Index m = 0; m < frames; ++m)
            {
                const Eigen::VectorXcd F = dsp::fft(Eigen::VectorXd(padded.segment(m * hop, n).cwiseProduct(w)));
                X.row(m) = F.head(n / 2 + 1).transpose();
            }
            return X;
        }

        // sum_m w(n - m hop) f_m(n - m hop) / sum_m w^2(n - m hop), restricted to the original samples
        Eigen::VectorXd overlap_add(const Eigen::MatrixXcd &X, const Eigen::VectorXd &w, Eigen::Index hop, Eigen::Index length)
        {
            const Eigen::Index n = w.size();
            const Eigen::Index frames = X.rows();
            const Eigen::Index total = (frames - 1) * hop + n;
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(total);
            Eigen::VectorXd norm = Eigen::VectorXd::Zero(total);
            for (Eigen::Index m = 0; m < frames; ++m)
            {
                const Eigen::VectorXd frame = dsp::ifft(full_spectrum(X.row(m).transpose(), n)).real();
                acc.segment(m * hop, n) += frame.cwiseProduct(w);
                norm.segment(m * hop, n) += w.cwiseAbs2();
            }
            const Eigen::Index pad = padding(n, hop);
            Eigen::VectorXd y(length);
            for (Eigen::Index i = 0; i < length; ++i)
                y(i) = norm(pad + i) > 0 ? acc(pad + i) / norm(pad + i) : 0.0;
            return y;
        }

        Eigen::MatrixXd resample_bilinear(const Eigen::MatrixXd &src, Eigen::Index rows, Eigen::Index cols)
        {
            Eigen::MatrixXd out(rows, cols);
            const auto coord = [](Eigen::Index i, Eigen::Index n_out, Eigen::Index n_in) {
                return n_out == 1 ? 0.0 : double(i) * double(n_in - 1) / double(n_out - 1);
            };
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                {
                    const double y = coord(r, rows, src.rows()), x = coord(c, cols, src.cols());
                    const Eigen::Index y0 = std::min<Eigen::Index>(Eigen::Index(y), src.rows() - 1);
                    const Eigen::Index x0 = std::min<Eigen::Index>(Eigen::Index(x), src.cols() - 1);
                    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, src.rows() - 1);
                    const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, src.cols() - 1);
                    const double fy = y - double(y0), fx = x - double(x0);
                    out(r, c) = (1 - fy) * ((1 - fx) * src(y0, x0) + fx * src(y0, x1)) + fy * ((1 - fx) * src(y1, x0) + fx * src(y1, x1));
                }
            return out;
        }
    } // namespace

    double Spectrogram::frame_time_s(Eigen::Index m) const
    {
        return (double(m * hop) - double(padding(window_length, hop)) + double(window_length) / 2.0) / sample_rate_hz;
    }

    void Spectrogram::validate() const
    {
        check_frame_params(window_length, hop);
        if (!(sample_rate_hz > 0))
            throw DomainError("spectrogram sample rate must be positive");
        require_dims(magnitude.cols() == window_length / 2 + 1, "spectrogram bin count does not match the window length");
        require_dims(magnitude.rows() == stft_frame_count(signal_length, window_length, hop),
                     "spectrogram frame count does not match the signal length");
        if (magnitude.size() > 0 && !(magnitude.minCoeff() >= 0.0))
            throw DomainError("spectrogram magnitudes must be non-negative");
        if (values)
            require_dims(values->rows() == magnitude.rows() && values->cols() == magnitude.cols(),
                         "spectrogram values and magnitudes differ in shape");
    }

    Eigen::Index stft_frame_count(Eigen::Index n, Eigen::Index window_length, Eigen::Index hop)
    {
        check_frame_params(window_length, hop);
        const Eigen::Index span = n + padding(window_length, hop);
        return (span + hop - 1) / hop;
    }

    Spectrogram stft(const Eigen::VectorXd &x, double sample_rate_hz, Eigen::Index window_length, Eigen::Index hop, dsp::Window window)
    {
        check_frame_params(window_length, hop);
        if (x.size() < window_length)
            throw DimensionError("signal of " + std::to_string(x.size()) + " samples is shorter than the window");
        if (!(sample_rate_hz > 0))
            throw DomainError("sample rate must be positive");
        Spectrogram s;
        s.window_length = window_length;
        s.hop = hop;
        s.sample_rate_hz = sample_rate_hz;
        s.signal_length = x.size();
        s.window = window;
        s.values = analyse(x, dsp::window(window, window_length), hop);
        s.magnitude = s.values->cwiseAbs();
        return s;
    }

    double stft_energy(const Spectrogram &spec)
    {
        if (!spec.values)
            throw DomainError("stft_energy needs complex STFT values");
        const Eigen::VectorXd w = dsp::window(spec.window, spec.window_length);
        const Eigen::VectorXd w2 = w.cwiseAbs2();
        if (!dsp::is_cola(w2, spec.hop, 1e-10))
            throw DomainError("squared window is not COLA at this hop; energy is not preserved");
        const double c = w2.sum() / double(spec.hop);
        const Eigen::Index n = spec.window_length;
        double total = 0.0;
        for (Eigen::Index k = 0; k < spec.values->cols(); ++k)
        {
            const double weight = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
            total += weight * spec.values->col(k).squaredNorm();
        }
        return total / (double(n) * c);
    }

    Eigen::VectorXd istft_synthesize(const Spectrogram &spec, const SynthesisOptions &options)
    {
        spec.validate();
        const Eigen::VectorXd w = dsp::window(spec.window, spec.window_length);
        if (!dsp::is_cola(w, spec.hop))
            throw DomainError("window/hop pair is not COLA; overlap-add synthesis would be biased");
        if (spec.magnitude.size() == 0 || spec.magnitude.maxCoeff() == 0.0)
            return Eigen::VectorXd::Zero(spec.signal_length);

        Eigen::MatrixXcd phase(spec.frames(), spec.bins());
        switch (options.policy)
        {
        case PhasePolicy::Given:
            if (!spec.values)
                throw DomainError("phase policy 'given' needs complex spectrogram values");
            for (Eigen::Index i = 0; i < phase.size(); ++i)
            {
                const auto v = (*spec.values)(i);
                phase(i) = std::abs(v) > 0 ? v / std::abs(v) : std::complex<double>(1.0, 0.0);
            }
            break;
        case PhasePolicy::Random:
        case PhasePolicy::GriffinLim:
        {
            Rng rng(options.seed);
            std::uniform_real_distribution<double> uniform(0.0, 2.0 * kPi);
            for (Eigen::Index c = 0; c < phase.cols(); ++c)
                for (Eigen::Index r = 0; r < phase.rows(); ++r)
                    phase(r, c) = std::polar(1.0, uniform(rng));
            break;
        }
        }

        const Eigen::MatrixXcd target = spec.magnitude.cast<std::complex<double>>();
        Eigen::VectorXd y = overlap_add(target.cwiseProduct(phase), w, spec.hop, spec.signal_length);
        if (options.policy == PhasePolicy::GriffinLim)
            for (int it = 0; it < options.iterations; ++it)
            {
                const Eigen::MatrixXcd X = analyse(y, w, spec.hop);
                for (Eigen::Index i = 0; i < X.size(); ++i)
                    phase(i) = std::abs(X(i)) > 0 ? X(i) / std::abs(X(i)) : phase(i);
                y = overlap_add(target.cwiseProduct(phase), w, spec.hop, spec.signal_length);
            }
        return y;
    }

    Eigen::VectorXd doppler_waveform(const DopplerTemplate &tpl)
    {
        if (!(tpl.sample_rate_hz > 0) || !(tpl.duration_s > 0))
            throw DomainError("Doppler template needs positive sample rate and duration");
        const double nyquist = tpl.sample_rate_hz / 2.0;
        const Eigen::Index n = Eigen::Index(std::llround(tpl.duration_s * tpl.sample_rate_hz));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (const auto &rotor : tpl.rotors)
        {
            if (rotor.blades < 1 || !(rotor.rate_hz >= 0) || !(rotor.max_doppler_hz >= 0))
                throw DomainError("rotor needs at least one blade and non-negative rate and Doppler");
            if (tpl.centre_hz + rotor.max_doppler_hz >= nyquist || tpl.centre_hz - rotor.max_doppler_hz <= 0)
                throw DomainError("rotor Doppler " + std::to_string(rotor.max_doppler_hz) + " Hz around " + std::to_string(tpl.centre_hz) +
                                  " Hz leaves (0, Nyquist = " + std::to_string(nyquist) + " Hz)");
            for (int b = 0; b < rotor.blades; ++b)
            {
                const double theta = rotor.phase_rad + 2.0 * kPi * double(b) / double(rotor.blades);
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    const double t = double(i) / tpl.sample_rate_hz;
                    double excursion;
                    if (rotor.rate_hz > 0)
                        excursion = rotor.max_doppler_hz / rotor.rate_hz * (std::cos(theta) - std::cos(2.0 * kPi * rotor.rate_hz * t + theta));
                    else
                        excursion = 2.0 * kPi * rotor.max_doppler_hz * std::sin(theta) * t;
                    x(i) += std::cos(2.0 * kPi * tpl.centre_hz * t + excursion);
                }
            }
        }
        return x;
    }

    Spectrogram doppler_signature(const DopplerTemplate &tpl)
    {
        const Eigen::VectorXd x = doppler_waveform(tpl);
        Spectrogram s = stft(x, tpl.sample_rate_hz, tpl.window_length, tpl.hop, dsp::Window::Hann);
        // a unit-amplitude stationary cosine peaks at sum(w) / 2
        const double peak = dsp::window(dsp::Window::Hann, tpl.window_length).sum() / 2.0;
        *s.values /= peak;
        s.magnitude = s.values->cwiseAbs().cwiseMin(1.0);
        return s;
    }

    double signature_fidelity(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b_in, bool resample)
    {
        Eigen::MatrixXd b = b_in;
        if (a.rows() != b.rows() || a.cols() != b.cols())
        {
            if (!resample)
                throw DimensionError("spectrogram shapes differ (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
            b = resample_bilinear(b_in, a.rows(), a.cols());
        }
        if (a.size() == 0)
            return 0.0;
        const Eigen::ArrayXXd da = a.array() - a.mean();
        const Eigen::ArrayXXd db = b.array() - b.mean();
        const double na = std::sqrt((da * da).sum()), nb = std::sqrt((db * db).sum());
        if (!(na > 0) || !(nb > 0))
            return 0.0;
        return std::clamp((da * db).sum() / (na * nb), -1.0, 1.0);
    }

    double signature_fidelity(const Spectrogram &a, const Spectrogram &b, bool resample)
    {
        return signature_fidelity(a.magnitude, b.magnitude, resample);
    }
} // namespace msa

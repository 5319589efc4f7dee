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

// Small signal-processing toolbox shared by the modem, mixer and sensing code.
// Transforms go through Eigen::FFT.

#pragma once

#include "msa/types.hpp"

#include <Eigen/Dense>

namespace msa::dsp
{
    using Eigen::VectorXcd;
    using Eigen::VectorXd;

    VectorXcd fft(const VectorXcd &x);
    VectorXcd ifft(const VectorXcd &X); // scaled by 1/N
    VectorXcd fft(const VectorXd &x);

    enum class Window
    {
        Hann,     // periodic Hann: COLA at hop = n/2
        SqrtHann, // periodic sqrt-Hann
        Rectangular,
        BlackmanHarris, // 4-term, for high dynamic range spectra
    };

    VectorXd window(Window kind, Eigen::Index n);

    // sum_m w[n - m*hop] is constant (relative deviation below tol) for every n
    bool is_cola(const VectorXd &w, Eigen::Index hop, double tol = 1e-10);

    // Blackman-windowed sinc lowpass, cutoff in cycles/sample (0, 0.5), odd tap count, unit DC gain
    VectorXd lowpass_fir(double cutoff, Eigen::Index taps);

    // Linear convolution trimmed to the input length, aligned for odd-length centred kernels
    VectorXcd filter_same(const VectorXcd &x, const VectorXd &h);

    struct PowerSpectrum
    {
        VectorXd frequency_hz; // one-sided, 0 .. fs/2
        VectorXd power;        // power per bin
    };

    // Welch average of windowed periodograms, 50% overlap
    PowerSpectrum welch(const VectorXd &x, double sample_rate_hz, Eigen::Index segment, Window kind = Window::BlackmanHarris);

    // Complex amplitude of the component A cos(2 pi f t + p) of x: returns A e^{jp}.
    // Exact when the record holds an integer number of periods of f.
    std::complex<double> tone_phasor(const VectorXd &x, double sample_rate_hz, double f_hz);
} // namespace msa::dsp

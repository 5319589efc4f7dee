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

// Micro-Doppler spoofing: target spectrograms, STFT analysis, overlap-add synthesis and fidelity scoring.
//
// Frames start every `hop` samples on the signal zero-padded by (window - hop) at both ends, so every
// input sample is covered by the same number of frames. Bins are one-sided (real signals).

#pragma once

#include "msa/dsp.hpp"
#include "msa/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace msa
{
    struct Spectrogram
    {
        Eigen::MatrixXd magnitude;               // frames x bins, non-negative
        std::optional<Eigen::MatrixXcd> values;  // complex STFT when known
        Eigen::Index window_length = 0;
        Eigen::Index hop = 0;
        double sample_rate_hz = 0.0;
        Eigen::Index signal_length = 0;          // samples of the analysed / synthesized waveform
        dsp::Window window = dsp::Window::Hann;

        Eigen::Index frames() const { return magnitude.rows(); }
        Eigen::Index bins() const { return magnitude.cols(); }
        double bin_hz(Eigen::Index k) const { return sample_rate_hz * double(k) / double(window_length); }
        double frame_time_s(Eigen::Index m) const; // time of the frame centre

        void validate() const;
    };

    // Number of frames for a signal of n samples
    Eigen::Index stft_frame_count(Eigen::Index n, Eigen::Index window_length, Eigen::Index hop);

    Spectrogram stft(const Eigen::VectorXd &x, double sample_rate_hz, Eigen::Index window_length, Eigen::Index hop,
                     dsp::Window window = dsp::Window::Hann);

    // (1 / (N c)) sum_m sum_k |X_m(k)|^2 over the full two-sided spectrum, with c the overlap-add sum of w^2.
    // Equals sum |x|^2 when w^2 is COLA at the hop (for instance sqrt-Hann at 50%).
    double stft_energy(const Spectrogram &spec);

    enum class PhasePolicy
    {
        Given,      // phases of spec.values
        Random,     // uniform phases from a seeded generator
        GriffinLim, // random start refined by alternating projection
    };

    struct SynthesisOptions
    {
        PhasePolicy policy = PhasePolicy::Random;
        std::uint64_t seed = 1;
        int iterations = 50; // Griffin-Lim
    };

    // Least-squares overlap-add inverse of stft using the magnitude grid and the chosen phases
    Eigen::VectorXd istft_synthesize(const Spectrogram &spec, const SynthesisOptions &options = {});

    struct RotorSpec
    {
        double rate_hz = 0.0;        // revolutions per second
        int blades = 2;
        double max_doppler_hz = 0.0; // blade-tip Doppler
        double phase_rad = 0.0;      // initial blade angle

        bool operator==(const RotorSpec &) const = default;
    };

    struct DopplerTemplate
    {
        std::vector<RotorSpec> rotors;
        double duration_s = 1.0;
        double sample_rate_hz = 8000.0;
        double centre_hz = 2000.0; // frequency offset of zero Doppler in the drive waveform
        Eigen::Index window_length = 256;
        Eigen::Index hop = 128;

        bool operator==(const DopplerTemplate &) const = default;
    };

    // Blade b of a rotor contributes cos(2 pi f_c t + (D / f_r) (cos theta_b - cos(2 pi f_r t + theta_b))),
    // theta_b = phase + 2 pi b / blades, whose frequency is f_c + D sin(2 pi f_r t + theta_b).
    Eigen::VectorXd doppler_waveform(const DopplerTemplate &tpl);

    // STFT of doppler_waveform scaled so a unit stationary tone peaks at 1, magnitudes clipped to [0, 1].
    // values keeps the unclipped complex sum over rotors and blades.
    Spectrogram doppler_signature(const DopplerTemplate &tpl);

    // Pearson correlation of two magnitude grids; 0 if either grid is constant.
    // With resample set, b is bilinearly resampled onto a's shape first.
    double signature_fidelity(const Spectrogram &a, const Spectrogram &b, bool resample = false);
    double signature_fidelity(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b, bool resample = false);
} // namespace msa

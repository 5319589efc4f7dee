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

// Baseband/IF modem: Gray QAM, pulse shaping, digital up- and down-conversion,
// DAC quantization and link-quality metrics.
//
//     x_IF(t) = sum_n [a_n cos(2 pi f_IF t) - b_n sin(2 pi f_IF t)] g(t - n T_s)
//
// with t the absolute waveform time, so symbols and carrier share one clock.

#pragma once

#include "msa/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace msa
{
    using Bits = std::vector<std::uint8_t>;

    // Square Gray-coded QAM. The first half of each symbol label (MSB first) selects the in-phase
    // level, the second half the quadrature level; both axes are Gray coded independently.
    class QamConstellation
    {
    public:
        explicit QamConstellation(int order);

        int order() const { return order_; }
        int bits_per_symbol() const { return bits_; }
        int side() const { return side_; }

        // points()(label) for label in [0, order)
        const Eigen::VectorXcd &points() const { return points_; }

        Eigen::VectorXcd map(const Bits &bits) const;
        Bits demap(const Eigen::VectorXcd &symbols) const;

        // Index of the nearest constellation point for each symbol
        std::vector<int> slice(const Eigen::VectorXcd &symbols) const;

    private:
        int axis_level(double coordinate) const;

        int order_;
        int bits_;
        int side_;
        double scale_; // 1 / sqrt(2 (L^2 - 1) / 3)
        Eigen::VectorXcd points_;
        std::vector<int> gray_;     // level -> axis bit pattern
        std::vector<int> level_of_; // axis bit pattern -> level
    };

    struct IFParams
    {
        double f_if_hz = 0.5e6;
        double sample_rate_hz = 2e6;
        int samples_per_symbol = 10;

        void validate() const;
        double symbol_period_s() const { return double(samples_per_symbol) / sample_rate_hz; }
        bool operator==(const IFParams &) const = default;
    };

    struct PulseShape
    {
        enum class Kind
        {
            Rectangular, // u(t) - u(t - T_s)
            RaisedCosine,
        };

        Kind kind = Kind::RaisedCosine;
        double rolloff = 0.35;
        int span_symbols = 8;

        static PulseShape rectangular() { return {Kind::Rectangular, 0.0, 1}; }

        void validate() const;
        bool operator==(const PulseShape &) const = default;
    };

    // Raised-cosine impulse response at t / T_s, peak value 1
    double raised_cosine(double t_over_symbol, double rolloff);

    // Pulse taps on the sample grid, centred, scaled so sum g^2 = samples_per_symbol.
    // Rectangular: samples_per_symbol ones.
    Eigen::VectorXd pulse_taps(const PulseShape &pulse, int samples_per_symbol);

    struct IFWaveform
    {
        Eigen::VectorXd samples;
        double sample_rate_hz = 0.0;
        double origin_s = 0.0; // time of samples(0)
        double full_scale = std::numeric_limits<double>::infinity();

        Eigen::Index size() const { return samples.size(); }
        double time(Eigen::Index i) const { return origin_s + double(i) / sample_rate_hz; }
    };

    IFWaveform duc(const Eigen::VectorXcd &symbols, const IFParams &params, const PulseShape &pulse = {});

    // Inverse of duc with known timing. Rectangular: per-symbol least-squares fit of the two quadrature
    // carriers. Raised cosine: complex mixing, FIR lowpass that rejects the 2 f_IF image, sampling at
    // the symbol centres.
    Eigen::VectorXcd ddc(const IFWaveform &waveform, const IFParams &params, const PulseShape &pulse,
                         Eigen::Index symbol_count);

    inline constexpr int kNoQuantization = std::numeric_limits<int>::max();

    struct QuantizeResult
    {
        IFWaveform waveform;
        std::size_t clipped = 0;
    };

    // Uniform mid-rise quantizer, step 2 full_scale / 2^bits, saturating at +-(full_scale - step/2)
    QuantizeResult quantize(const IFWaveform &waveform, int bits, double full_scale);

    // EVM in dB relative to the reference power, floored at -120 dB
    double evm_db(const Eigen::VectorXcd &rx, const Eigen::VectorXcd &ref);
    inline constexpr double kEvmFloorDb = -120.0;

    double ber(const Bits &a, const Bits &b);
    std::size_t bit_errors(const Bits &a, const Bits &b);

    struct RateParams
    {
        double symbol_rate;
        double data_rate;
    };

    RateParams rate_params(double sample_rate_hz, int samples_per_symbol, int order);

    Bits random_bits(std::size_t count, Rng &rng);

    // x + n, n real white Gaussian with the given per-sample variance
    Eigen::VectorXd add_real_noise(const Eigen::VectorXd &x, double sigma2, Rng &rng);
} // namespace msa

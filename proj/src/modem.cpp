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

#include "msa/modem.hpp"
#include "msa/dsp.hpp"
#include "msa/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace msa
{
    namespace
    {
        constexpr double kPi = std::numbers::pi;

        int log2_exact(int n)
        {
            if (n < 1 || !std::has_single_bit(unsigned(n)))
                return -1;
            return std::countr_zero(unsigned(n));
        }
    } // namespace

    QamConstellation::QamConstellation(int order) : order_(order)
    {
        if (order != 4 && order != 16 && order != 64 && order != 256 && order != 1024)
            throw DomainError("QAM order " + std::to_string(order) + " not in {4, 16, 64, 256, 1024}");
        bits_ = log2_exact(order);
        const int axis_bits = bits_ / 2;
        side_ = 1 << axis_bits;
        scale_ = 1.0 / std::sqrt(2.0 * (double(side_) * side_ - 1.0) / 3.0);

        gray_.resize(size_t(side_));
        level_of_.resize(size_t(side_));
        for (int level = 0; level < side_; ++level)
        {
            gray_[size_t(level)] = level ^ (level >> 1);
            level_of_[size_t(gray_[size_t(level)])] = level;
        }

        points_.resize(order);
        for (int label = 0; label < order; ++label)
        {
            const int li = level_of_[size_t(label >> axis_bits)];
            const int lq = level_of_[size_t(label & (side_ - 1))];
            points_(label) = scale_ * std::complex<double>(2.0 * li - (side_ - 1), 2.0 * lq - (side_ - 1));
        }
    }

    Eigen::VectorXcd QamConstellation::map(const Bits &bits) const
    {
        if (bits.size() % size_t(bits_) != 0)
            throw DimensionError("bit count " + std::to_string(bits.size()) + " is not a multiple of " + std::to_string(bits_));
        const Eigen::Index n = Eigen::Index(bits.size() / size_t(bits_));
        Eigen::VectorXcd out(n);
        for (Eigen::Index s = 0; s < n; ++s)
        {
            int label = 0;
            for (int b = 0; b < bits_; ++b)
                label = (label << 1) | (bits[size_t(s) * size_t(bits_) + size_t(b)] & 1);
            out(s) = points_(label);
        }
        return out;
    }

    int QamConstellation::axis_level(double coordinate) const
    {
        const double level = std::round((coordinate / scale_ + double(side_ - 1)) / 2.0);
        return int(std::clamp(level, 0.0, double(side_ - 1)));
    }

    std::vector<int> QamConstellation::slice(const Eigen::VectorXcd &symbols) const
    {
        const int axis_bits = bits_ / 2;
        std::vector<int> labels(size_t(symbols.size()));
        for (Eigen::Index s = 0; s < symbols.size(); ++s)
        {
            const int gi = gray_[size_t(axis_level(symbols(s).real()))];
            const int gq = gray_[size_t(axis_level(symbols(s).imag()))];
            labels[size_t(s)] = (gi << axis_bits) | gq;
        }
        return labels;
    }

    Bits QamConstellation::demap(const Eigen::VectorXcd &symbols) const
    {
        const auto labels = slice(symbols);
        Bits out(labels.size() * size_t(bits_));
        for (size_t s = 0; s < labels.size(); ++s)
            for (int b = 0; b < bits_; ++b)
                out[s * size_t(bits_) + size_t(b)] = std::uint8_t((labels[s] >> (bits_ - 1 - b)) & 1);
        return out;
    }

    void IFParams::validate() const
    {
        if (!(sample_rate_hz > 0))
            throw DomainError("sample rate must be positive");
        if (!(f_if_hz > 0 && f_if_hz < sample_rate_hz / 2))
            throw DomainError("IF " + std::to_string(f_if_hz) + " Hz must lie in (0, sample_rate/2)");
        if (samples_per_symbol < 2)
            throw DomainError("samples per symbol must be at least 2");
    }

    void PulseShape::validate() const
    {
        if (kind == Kind::RaisedCosine)
        {
            if (!(rolloff >= 0 && rolloff <= 1))
                throw DomainError("raised-cosine rolloff must lie in [0, 1]");
            if (span_symbols < 1)
                throw DomainError("pulse span must be at least one symbol");
        }
    }

    double raised_cosine(double t, double beta)
    {
        const auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); };
        if (beta > 0 && std::abs(std::abs(2.0 * beta * t) - 1.0) < 1e-10)
            return kPi / 4.0 * sinc(1.0 / (2.0 * beta));
        return sinc(t) * std::cos(kPi * beta * t) / (1.0 - 4.0 * beta * beta * t * t);
    }

    Eigen::VectorXd pulse_taps(const PulseShape &pulse, int sps)
    {
        pulse.validate();
        if (pulse.kind == PulseShape::Kind::Rectangular)
            return Eigen::VectorXd::Ones(sps);
        const Eigen::Index half = Eigen::Index(pulse.span_symbols) * sps / 2;
        Eigen::VectorXd g(2 * half + 1);
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g(i) = raised_cosine(double(i - half) / double(sps), pulse.rolloff);
        return g * std::sqrt(double(sps) / g.squaredNorm());
    }

    IFWaveform duc(const Eigen::VectorXcd &symbols, const IFParams &params, const PulseShape &pulse)
    {
        params.validate();
        const int sps = params.samples_per_symbol;
        const double fs = params.sample_rate_hz;
        const Eigen::VectorXd g = pulse_taps(pulse, sps);
        const Eigen::Index n_sym = symbols.size();

        IFWaveform w;
        w.sample_rate_hz = fs;
        Eigen::Index lead = 0;
        if (pulse.kind == PulseShape::Kind::Rectangular)
            w.samples = Eigen::VectorXd::Zero(n_sym * sps);
        else
        {
            lead = (g.size() - 1) / 2;
            w.samples = Eigen::VectorXd::Zero(n_sym * sps + 2 * lead);
        }
        w.origin_s = -double(lead) / fs;

        // complex envelope s(t) = sum_n s_n g(t - n T_s), then x = Re{s e^{j w t}}
        Eigen::VectorXcd envelope = Eigen::VectorXcd::Zero(w.samples.size());
        for (Eigen::Index n = 0; n < n_sym; ++n)
            envelope.segment(n * sps, g.size()) += symbols(n) * g.cast<std::complex<double>>();
        for (Eigen::Index i = 0; i < w.samples.size(); ++i)
        {
            const double phase = 2.0 * kPi * params.f_if_hz * w.time(i);
            w.samples(i) = envelope(i).real() * std::cos(phase) - envelope(i).imag() * std::sin(phase);
        }
        return w;
    }

    Eigen::VectorXcd ddc(const IFWaveform &waveform, const IFParams &params, const PulseShape &pulse, Eigen::Index symbol_count)
    {
        params.validate();
        if (std::abs(waveform.sample_rate_hz - params.sample_rate_hz) > 1e-9 * params.sample_rate_hz)
            throw DomainError("waveform sampled at " + std::to_string(waveform.sample_rate_hz) + " Hz, modem expects " +
                              std::to_string(params.sample_rate_hz) + " Hz");
        const int sps = params.samples_per_symbol;
        const double w0 = 2.0 * kPi * params.f_if_hz;
        const Eigen::VectorXd g = pulse_taps(pulse, sps);
        const Eigen::Index lead = pulse.kind == PulseShape::Kind::Rectangular ? 0 : (g.size() - 1) / 2;
        if (symbol_count < 1 || waveform.size() < symbol_count * sps + (pulse.kind == PulseShape::Kind::Rectangular ? 0 : lead + 1))
            throw DimensionError("waveform too short for " + std::to_string(symbol_count) + " symbols");

        Eigen::VectorXcd out(symbol_count);
        if (pulse.kind == PulseShape::Kind::Rectangular)
        {
            for (Eigen::Index n = 0; n < symbol_count; ++n)
            {
                Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
                Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
                for (Eigen::Index i = n * sps; i < (n + 1) * sps; ++i)
                {
                    const double t = waveform.time(i);
                    const Eigen::Vector2d basis(std::cos(w0 * t), -std::sin(w0 * t));
                    gram += basis * basis.transpose();
                    rhs += basis * waveform.samples(i);
                }
                const Eigen::Vector2d ab = gram.ldlt().solve(rhs);
                out(n) = {ab(0), ab(1)};
            }
            return out;
        }

        // 2 x e^{-j w t} = s(t) + conj(s(t)) e^{-2 j w t}; the image sits at 2 f_IF folded into the Nyquist band
        const double fs = params.sample_rate_hz;
        double image = std::fmod(2.0 * params.f_if_hz, fs);
        image = std::min(image, fs - image);
        const double band = (1.0 + pulse.rolloff) / (2.0 * params.symbol_period_s());
        if (!(image > 2.0 * band))
            throw DomainError("IF image at " + std::to_string(image) + " Hz overlaps the signal band");
        const double cutoff = 0.5 * image / fs;
        const Eigen::Index taps = 2 * (8 * sps) + 1;

        Eigen::VectorXcd mixed(waveform.size());
        for (Eigen::Index i = 0; i < waveform.size(); ++i)
            mixed(i) = 2.0 * waveform.samples(i) * std::polar(1.0, -w0 * waveform.time(i));
        const Eigen::VectorXcd base = dsp::filter_same(mixed, dsp::lowpass_fir(cutoff, taps));
        const double peak = g(lead);
        for (Eigen::Index n = 0; n < symbol_count; ++n)
            out(n) = base(n * sps + lead) / peak;
        return out;
    }

    QuantizeResult quantize(const IFWaveform &waveform, int bits, double full_scale)
    {
        if (bits < 1)
            throw DomainError("quantizer needs at least one bit");
        QuantizeResult r{waveform, 0};
        if (bits == kNoQuantization)
            return r;
        if (!(full_scale > 0))
            throw DomainError("full scale must be positive");
        const double levels = std::ldexp(1.0, bits);
        const double step = 2.0 * full_scale / levels;
        const double top = full_scale - step / 2.0;
        for (Eigen::Index i = 0; i < waveform.size(); ++i)
        {
            const double x = waveform.samples(i);
            double q = step * (std::floor(x / step) + 0.5);
            if (q > top || q < -top)
            {
                if (std::abs(x) > full_scale)
                    ++r.clipped;
                q = std::clamp(q, -top, top);
            }
            r.waveform.samples(i) = q;
        }
        r.waveform.full_scale = full_scale;
        return r;
    }

    double evm_db(const Eigen::VectorXcd &rx, const Eigen::VectorXcd &ref)
    {
        if (rx.size() == 0 || ref.size() == 0)
            throw DimensionError("evm_db: empty input");
        require_dims(rx.size() == ref.size(), "evm_db: length mismatch");
        const double ref_power = ref.squaredNorm();
        if (!(ref_power > 0))
            throw DegenerateError("evm_db: reference has zero power");
        const double ratio = (rx - ref).squaredNorm() / ref_power;
        if (ratio <= 0)
            return kEvmFloorDb;
        return std::max(kEvmFloorDb, 10.0 * std::log10(ratio));
    }

    std::size_t bit_errors(const Bits &a, const Bits &b)
    {
        if (a.empty())
            throw DimensionError("bit sequences are empty");
        require_dims(a.size() == b.size(), "bit sequences differ in length");
        std::size_t errors = 0;
        for (size_t i = 0; i < a.size(); ++i)
            errors += (a[i] & 1) != (b[i] & 1);
        return errors;
    }

    double ber(const Bits &a, const Bits &b)
    {
        return double(bit_errors(a, b)) / double(a.size());
    }

    RateParams rate_params(double sample_rate_hz, int samples_per_symbol, int order)
    {
        if (samples_per_symbol < 1)
            throw DomainError("samples per symbol must be at least 1");
        if (!(sample_rate_hz > 0))
            throw DomainError("sample rate must be positive");
        const int bits = log2_exact(order);
        if (bits < 1)
            throw DomainError("modulation order " + std::to_string(order) + " is not a power of two");
        const double symbol_rate = sample_rate_hz / double(samples_per_symbol);
        return {symbol_rate, symbol_rate * double(bits)};
    }

    Bits random_bits(std::size_t count, Rng &rng)
    {
        Bits out(count);
        std::uniform_int_distribution<int> coin(0, 1);
        for (auto &b : out)
            b = std::uint8_t(coin(rng));
        return out;
    }

    Eigen::VectorXd add_real_noise(const Eigen::VectorXd &x, double sigma2, Rng &rng)
    {
        if (!(sigma2 >= 0))
            throw DomainError("noise variance must be non-negative");
        if (sigma2 == 0)
            return x;
        std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
        Eigen::VectorXd y = x;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            y(i) += normal(rng);
        return y;
    }
} // namespace msa

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

#include "msa/mixer.hpp"
#include "msa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace msa
{
    DiodeModel DiodeModel::at_bias(double saturation_current_a, double alpha_d_per_v, double bias_voltage_v)
    {
        if (!(saturation_current_a > 0))
            throw DomainError("diode saturation current must be positive");
        if (!(alpha_d_per_v > 0))
            throw DomainError("diode exponent must be positive");
        if (!std::isfinite(bias_voltage_v))
            throw DomainError("bias voltage must be finite");
        DiodeModel d;
        d.saturation_current_a = saturation_current_a;
        d.alpha_d_per_v = alpha_d_per_v;
        d.bias_voltage_v = bias_voltage_v;
        const double e = std::exp(alpha_d_per_v * bias_voltage_v);
        d.bias_current_a = saturation_current_a * (e - 1.0);
        d.dynamic_resistance_ohm = 1.0 / (alpha_d_per_v * saturation_current_a * e);
        d.second_order_resistance_ohm = 1.0 / (alpha_d_per_v * alpha_d_per_v * saturation_current_a * e);
        // local R_d'(v) / R_d'(0) = e^{-alpha_d v} within [0.9, 1.1]
        d.linear_lo_v = -std::log(1.1) / alpha_d_per_v;
        d.linear_hi_v = -std::log(0.9) / alpha_d_per_v;
        d.validate();
        return d;
    }

    void DiodeModel::validate() const
    {
        if (!(saturation_current_a > 0) || !(alpha_d_per_v > 0))
            throw DomainError("diode needs I_s > 0 and alpha_d > 0");
        if (!(dynamic_resistance_ohm > 0) || !(second_order_resistance_ohm > 0))
            throw DomainError("diode resistances must be positive");
        if (!(linear_lo_v < linear_hi_v))
            throw DomainError("diode linear region is empty");
    }

    double diode_current(double v, const DiodeModel &model, DiodeMode mode)
    {
        if (!std::isfinite(v))
            throw DomainError("diode voltage must be finite");
        if (mode == DiodeMode::Exact)
            return model.saturation_current_a * std::expm1(model.alpha_d_per_v * (model.bias_voltage_v + v));
        return model.bias_current_a + v / model.dynamic_resistance_ohm + v * v / (2.0 * model.second_order_resistance_ohm);
    }

    IFWaveform mix(const IFWaveform &v_rf, const IFWaveform &v_if, const DiodeModel &model)
    {
        model.validate();
        if (v_rf.sample_rate_hz != v_if.sample_rate_hz || v_rf.origin_s != v_if.origin_s || v_rf.size() != v_if.size())
            throw DimensionError("mix: RF and IF drives are not on the same sampling clock");
        IFWaveform out;
        out.sample_rate_hz = v_rf.sample_rate_hz;
        out.origin_s = v_rf.origin_s;
        out.samples = v_rf.samples.cwiseProduct(v_if.samples) / model.second_order_resistance_ohm;
        return out;
    }

    MagnitudeCurve::MagnitudeCurve(std::vector<double> volts, std::vector<double> magnitudes)
        : volts_(std::move(volts)), mags_(std::move(magnitudes))
    {
        if (volts_.size() < 2 || volts_.size() != mags_.size())
            throw DomainError("magnitude curve needs at least two (volt, magnitude) knots");
        for (size_t i = 0; i < volts_.size(); ++i)
        {
            if (!std::isfinite(volts_[i]) || (i > 0 && !(volts_[i] > volts_[i - 1])))
                throw DomainError("magnitude curve voltages must be finite and strictly increasing");
            if (!(mags_[i] >= 0.0 && mags_[i] <= 1.0))
                throw DomainError("magnitude curve value " + std::to_string(mags_[i]) + " outside [0, 1]");
        }

        // Fritsch-Carlson slopes
        const size_t n = volts_.size();
        std::vector<double> delta(n - 1);
        for (size_t i = 0; i + 1 < n; ++i)
            delta[i] = (mags_[i + 1] - mags_[i]) / (volts_[i + 1] - volts_[i]);
        slopes_.assign(n, 0.0);
        slopes_[0] = delta[0];
        slopes_[n - 1] = delta[n - 2];
        for (size_t i = 1; i + 1 < n; ++i)
            slopes_[i] = delta[i - 1] * delta[i] <= 0 ? 0.0 : (delta[i - 1] + delta[i]) / 2.0;
        for (size_t i = 0; i + 1 < n; ++i)
        {
            if (delta[i] == 0.0)
            {
                slopes_[i] = slopes_[i + 1] = 0.0;
                continue;
            }
            const double a = slopes_[i] / delta[i];
            const double b = slopes_[i + 1] / delta[i];
            const double r = a * a + b * b;
            if (r > 9.0)
            {
                const double t = 3.0 / std::sqrt(r);
                slopes_[i] = t * a * delta[i];
                slopes_[i + 1] = t * b * delta[i];
            }
        }
    }

    double MagnitudeCurve::operator()(double v) const
    {
        if (!(v >= volts_.front() && v <= volts_.back()))
            throw DomainError("bias " + std::to_string(v) + " V outside curve domain [" + std::to_string(volts_.front()) + ", " +
                              std::to_string(volts_.back()) + "] V");
        const auto it = std::upper_bound(volts_.begin(), volts_.end(), v);
        const size_t i = std::min<size_t>(size_t(std::max<std::ptrdiff_t>(it - volts_.begin() - 1, 0)), volts_.size() - 2);
        const double h = volts_[i + 1] - volts_[i];
        const double t = (v - volts_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double m = (2 * t3 - 3 * t2 + 1) * mags_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] + (-2 * t3 + 3 * t2) * mags_[i + 1] +
                         (t3 - t2) * h * slopes_[i + 1];
        return std::clamp(m, 0.0, 1.0);
    }

    bool MagnitudeCurve::strictly_monotone() const
    {
        const bool up = mags_[1] > mags_[0];
        for (size_t i = 0; i + 1 < mags_.size(); ++i)
            if (up ? !(mags_[i + 1] > mags_[i]) : !(mags_[i + 1] < mags_[i]))
                return false;
        return true;
    }

    double reflect_magnitude(double v_bias, const MagnitudeCurve &curve)
    {
        return curve(v_bias);
    }

    MagnitudeCurve default_state_curve(int state, double v_lo, double v_hi)
    {
        if (state == 0)
            return MagnitudeCurve({v_lo, v_hi}, {0.8, 0.1});
        if (state == 1)
            return MagnitudeCurve({v_lo, v_hi}, {1.0, 0.2});
        throw DomainError("phase state must be 0 or 1");
    }

    MagnitudeCurve diode_reflection_curve(const DiodeModel &model, double z0_ohm, double v_lo, double v_hi, int knots)
    {
        if (!(z0_ohm > 0))
            throw DomainError("reference impedance must be positive");
        if (knots < 2 || !(v_hi > v_lo))
            throw DomainError("diode reflection curve needs v_hi > v_lo and at least two knots");
        std::vector<double> v(static_cast<size_t>(knots)), m(static_cast<size_t>(knots));
        for (int i = 0; i < knots; ++i)
        {
            v[size_t(i)] = v_lo + (v_hi - v_lo) * double(i) / double(knots - 1);
            const double r = 1.0 / (model.alpha_d_per_v * model.saturation_current_a * std::exp(model.alpha_d_per_v * v[size_t(i)]));
            m[size_t(i)] = std::abs((r - z0_ohm) / (r + z0_ohm));
        }
        return MagnitudeCurve(std::move(v), std::move(m));
    }

    Predistortion::Predistortion(MagnitudeCurve curve) : curve_(std::move(curve))
    {
        if (!curve_.strictly_monotone())
            throw CalibrationError("magnitude curve is not strictly monotone; it has no inverse");
    }

    double Predistortion::m_min() const { return std::min(curve_.m_at_min(), curve_.m_at_max()); }
    double Predistortion::m_max() const { return std::max(curve_.m_at_min(), curve_.m_at_max()); }

    double Predistortion::operator()(double m) const
    {
        if (!(m >= m_min() && m <= m_max()))
            throw DomainError("magnitude " + std::to_string(m) + " outside the calibrated range");
        double lo = curve_.v_min(), hi = curve_.v_max();
        const bool up = curve_.increasing();
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if ((curve_(mid) < m) == up)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    Predistortion calibrate_predistortion(const MagnitudeCurve &curve)
    {
        return Predistortion(curve);
    }

    double linear_drive(double m, const MagnitudeCurve &curve)
    {
        const double t = (m - curve.m_at_min()) / (curve.m_at_max() - curve.m_at_min());
        return curve.v_min() + t * (curve.v_max() - curve.v_min());
    }

    DistortionMetrics distortion_metrics(const Eigen::VectorXcd &reference, const Eigen::VectorXcd &observed)
    {
        if (reference.size() == 0)
            throw DimensionError("distortion_metrics: empty input");
        require_dims(reference.size() == observed.size(), "distortion_metrics: length mismatch");
        DistortionMetrics out;
        const double ref_power = reference.squaredNorm();
        if (!(ref_power > 0))
            throw DegenerateError("distortion_metrics: reference has zero power");
        out.gain = reference.dot(observed) / ref_power; // conj(ref)^T obs
        if (std::abs(out.gain) == 0.0)
            throw DegenerateError("distortion_metrics: observed is orthogonal to the reference");
        const Eigen::VectorXcd corrected = observed / out.gain;
        out.evm_db = evm_db(corrected, reference);

        auto key = [](std::complex<double> z) { return std::pair(std::llround(z.real() * 1e9), std::llround(z.imag() * 1e9)); };
        std::map<std::pair<long long, long long>, size_t> index;
        std::vector<double> sum_sq;
        std::vector<size_t> count;
        for (Eigen::Index i = 0; i < reference.size(); ++i)
        {
            auto [it, inserted] = index.try_emplace(key(reference(i)), sum_sq.size());
            if (inserted)
            {
                sum_sq.push_back(0.0);
                count.push_back(0);
            }
            sum_sq[it->second] += std::norm(corrected(i) - reference(i));
            ++count[it->second];
        }
        out.cluster_spread.resize(sum_sq.size());
        for (size_t c = 0; c < sum_sq.size(); ++c)
        {
            out.cluster_spread[c] = std::sqrt(sum_sq[c] / double(count[c]));
            out.worst_cluster_spread = std::max(out.worst_cluster_spread, out.cluster_spread[c]);
        }
        return out;
    }
} // namespace msa

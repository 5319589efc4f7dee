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

// The unit cell as a single-diode mixer.
//
// Around a bias V_b the diode current i = I_s (e^{alpha_d (V_b + v)} - 1) expands to
// I_0 + v / R_d + v^2 / (2 R_d'), so driving it with v = v_RF + v_IF leaves the product term
// v_RF v_IF / R_d' at f_RF +- f_IF. Bias-to-magnitude curves and their inverses implement the
// predistortion that keeps the magnitude modulation linear.

#pragma once

#include "msa/modem.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace msa
{
    struct DiodeModel
    {
        double saturation_current_a = 5e-6;
        double alpha_d_per_v = 38.7; // 1 / (n V_T), n = 1 at room temperature
        double bias_voltage_v = 0.0;
        double bias_current_a = 0.0;          // I_0
        double dynamic_resistance_ohm = 0.0;  // R_d
        double second_order_resistance_ohm = 0.0; // R_d'
        double linear_lo_v = 0.0; // small-signal span where the local R_d' stays within 10% of its bias value
        double linear_hi_v = 0.0;

        // Derives I_0, R_d, R_d' and the linear region from (I_s, alpha_d, V_b)
        static DiodeModel at_bias(double saturation_current_a, double alpha_d_per_v, double bias_voltage_v);

        void validate() const;
        bool operator==(const DiodeModel &) const = default;
    };

    enum class DiodeMode
    {
        Exact,  // I_s (e^{alpha_d (V_b + v)} - 1)
        Taylor2 // I_0 + v / R_d + v^2 / (2 R_d')
    };

    double diode_current(double v, const DiodeModel &model, DiodeMode mode);

    // i_ac = v_rf v_if / R_d' on a shared sampling clock
    IFWaveform mix(const IFWaveform &v_rf, const IFWaveform &v_if, const DiodeModel &model);

    // Tabulated bias-voltage -> reflection-magnitude map with monotone cubic (Fritsch-Carlson) interpolation
    class MagnitudeCurve
    {
    public:
        // Knots must be strictly increasing in voltage with magnitudes in [0, 1]. Monotonicity of the
        // magnitudes is not required here; calibration refuses curves that are not strictly monotone.
        MagnitudeCurve(std::vector<double> volts, std::vector<double> magnitudes);

        double operator()(double v) const;

        double v_min() const { return volts_.front(); }
        double v_max() const { return volts_.back(); }
        double m_at_min() const { return mags_.front(); }
        double m_at_max() const { return mags_.back(); }
        bool strictly_monotone() const;
        bool increasing() const { return mags_.back() > mags_.front(); }

        const std::vector<double> &volts() const { return volts_; }
        const std::vector<double> &magnitudes() const { return mags_; }

        bool operator==(const MagnitudeCurve &) const = default;

    private:
        std::vector<double> volts_;
        std::vector<double> mags_;
        std::vector<double> slopes_;
    };

    // Interpolated magnitude; a bias outside the curve domain is a DomainError
    double reflect_magnitude(double v_bias, const MagnitudeCurve &curve);

    // Default two-knot curves for the two phase states over the drive span [v_lo, v_hi]
    MagnitudeCurve default_state_curve(int state, double v_lo = 0.0, double v_hi = 1.0);

    // |Gamma| of the diode dynamic resistance R(v) = 1 / (alpha_d I_s e^{alpha_d v}) against a reference
    // impedance z0, sampled at `knots` voltages over [v_lo, v_hi]
    MagnitudeCurve diode_reflection_curve(const DiodeModel &model, double z0_ohm, double v_lo, double v_hi, int knots = 65);

    // Inverse of a strictly monotone curve, by bisection on the interpolant
    class Predistortion
    {
    public:
        explicit Predistortion(MagnitudeCurve curve);

        // Drive voltage that produces magnitude m; m outside the curve's range is a DomainError
        double operator()(double m) const;

        double m_min() const;
        double m_max() const;
        const MagnitudeCurve &curve() const { return curve_; }

    private:
        MagnitudeCurve curve_;
    };

    Predistortion calibrate_predistortion(const MagnitudeCurve &curve);

    // Straight line through the curve endpoints, i.e. the drive an uncalibrated transmitter would use
    double linear_drive(double m, const MagnitudeCurve &curve);

    struct DistortionMetrics
    {
        double evm_db = 0.0;
        double worst_cluster_spread = 0.0; // largest per-point RMS deviation after global gain removal
        std::complex<double> gain{1.0, 0.0};
        std::vector<double> cluster_spread; // in order of first appearance of each reference point
    };

    // Removes the least-squares complex gain between observed and reference, then reports
    // global EVM and per-reference-point RMS deviation
    DistortionMetrics distortion_metrics(const Eigen::VectorXcd &reference, const Eigen::VectorXcd &observed);
} // namespace msa

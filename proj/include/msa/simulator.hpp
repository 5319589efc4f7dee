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

// End-to-end link y(t) = H_o Lambda(t) Phi H_i x(t) + n(t) with x(t) = w_t s_c, and the experiments
// built on it.
//
// Symbol-level experiments (BER, two-stream) use the baseband equivalent of the superheterodyne chain:
// after RF down-conversion and DDC the magnitude modulation of element k contributes x_n h_k e^{j phi_k}
// per symbol, so y_n = s_c H_o diag(e^{j phi} o h_eff) X_n + n with X_n the per-element symbols.
//
// SNR reference: the noise variance of a sweep point is the incoherent (random-phase) average
// received power E_phi ||s_c H_o diag(phi) h_eff||^2 = |s_c|^2 sum_i ||H_o(:, i)||^2 |h_i|^2, averaged over
// the sweep's channel realizations, divided by the SNR. Precoding gain therefore shows up as SNR gain.

#pragma once

#include "msa/channel.hpp"
#include "msa/geometry.hpp"
#include "msa/mixer.hpp"
#include "msa/modem.hpp"
#include "msa/precoder.hpp"
#include "msa/reflection.hpp"
#include "msa/sensing.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace msa
{
    using CVectorD = CVector<double>;
    using CMatrixD = CMatrix<double>;

    enum class ChannelModel
    {
        Paths,    // path lists on both sides of the surface
        Rayleigh, // i.i.d. CN entries: H_i ~ CN(0, 1/K), H_o ~ CN(0, 1)
        Bypass,   // one virtual element with unit channels: AWGN only
    };

    enum class Precoding
    {
        None,       // uniformly random phases
        ClosedForm, // dominant right singular vector alignment
    };

    enum class SubsurfaceSplit
    {
        Index,   // elements [0, K/2) and [K/2, K) in storage order (top and bottom row halves)
        Columns, // left and right column halves
    };

    struct ScenarioConfig
    {
        // surface
        int rows = 16;
        int cols = 10;
        double carrier_hz = 5.8e9;
        double spacing_m = 0.5 * speed_of_light / 5.8e9;
        int grid_theta = 32;
        int grid_phi = 64;
        double pattern_exponent = 1.0;
        std::optional<std::vector<double>> phase_palette; // radians
        std::optional<std::vector<double>> phases_rad;    // static phases for `simulate`; closed form when unset
        std::string magnitudes_file; // magnitude time series for `simulate`; empty means all ones, one sample

        // terminals and channels
        int tx_antennas = 1;
        int rx_antennas = 1;
        double terminal_spacing_wavelengths = 0.5;
        ChannelModel channel = ChannelModel::Paths;
        std::vector<PathComponent<double>> tx_paths{{{1.0, 0.0}, 0.0, {0.5, 0.0}, {0.0, 0.0}}};  // tx -> surface
        std::vector<PathComponent<double>> rx_paths{{{1.0, 0.0}, 0.0, {0.4, 3.14}, {0.0, 0.0}}}; // surface -> rx
        std::vector<std::complex<double>> tx_beam;   // w_t; empty means uniform 1/sqrt(N_t)
        std::complex<double> carrier_envelope{1.0, 0.0}; // s_c

        // modem and diode
        IFParams modem;
        PulseShape pulse;
        int qam_order = 16;
        int dac_bits = 14;
        double dac_full_scale = 1.0;
        double diode_saturation_current_a = 5e-6;
        double diode_alpha_per_v = 38.7;
        double diode_bias_v = 0.0;
        std::string diode_curve_csv; // (volts, magnitude) knots; empty selects the default state curve

        double noise_sigma2 = 0.0;
        std::uint64_t seed = 1;

        struct BerSweep
        {
            std::vector<double> snr_db{0, 4, 8, 12, 16, 20};
            int trials = 200;
            std::size_t bits_per_point = 100000;
            Precoding precoding = Precoding::ClosedForm;
            bool operator==(const BerSweep &) const = default;
        } ber;

        struct DiversitySweep
        {
            std::vector<int> elements{8, 16, 32, 64, 128};
            int realizations = 200;
            bool operator==(const DiversitySweep &) const = default;
        } diversity;

        struct TwoStream
        {
            int order1 = 16;
            int order2 = 64;
            double snr_db = 25.0;
            std::size_t symbols = 10000;
            SubsurfaceSplit split = SubsurfaceSplit::Index;
            bool shared_h_eff = true;
            int restarts = 8;
            double tol = 1e-6;
            int max_iter = 500;
            bool operator==(const TwoStream &) const = default;
        } two_stream;

        struct Sensing
        {
            DopplerTemplate signature{{{5.0, 2, 500.0, 0.0}, {19.0, 4, 150.0, 0.3}}, 1.0, 8000.0, 2000.0, 256, 128};
            std::vector<Direction<double>> probes{{0.3, 0.5}, {0.9, 3.6}};
            int phase_state = 0;   // which default magnitude curve drives the surface
            double depth = 0.9;    // fraction of the curve's magnitude span used by the modulation
            bool calibrated = true;
            double snr_db = 200.0; // per-probe noise relative to the probe's received power
            bool operator==(const Sensing &) const = default;
        } sensing;

        double wavelength_m() const { return speed_of_light / carrier_hz; }
        Eigen::Index elements() const { return Eigen::Index(rows) * cols; }
        DiodeModel diode() const { return DiodeModel::at_bias(diode_saturation_current_a, diode_alpha_per_v, diode_bias_v); }
        CVectorD tx_beam_vector() const;

        // Throws ConfigError naming the offending field
        void validate() const;

        bool operator==(const ScenarioConfig &) const = default;
    };

    // Everything derived from a scenario for one channel realization
    struct Link
    {
        ArrayGeometry<double> geometry;
        std::optional<DirectionGrid<double>> grid; // unset for Rayleigh and bypass links
        Positions<double> positions;
        CMatrixD W;
        CMatrixD H_tx_surface;
        CMatrixD H_surface_rx;
        EffectiveChannels<double> eff;
        std::complex<double> s_c{1.0, 0.0};
        double pattern_exponent = 1.0;

        Eigen::Index elements() const { return eff.h_eff.size(); }

        // Conjugated scattering row w(Omega)^H = (F(Omega) a_MSA(Omega))^H of a far-field probe
        Eigen::RowVectorXcd probe_row(const Direction<double> &dir) const;
    };

    // Rayleigh links draw from `realization_seed`; path links ignore it
    Link build_link(const ScenarioConfig &cfg, std::uint64_t realization_seed, Diagnostics *diag = nullptr);

    // Rayleigh effective channels: H_o (N_r x K) ~ CN(0, 1) drawn first, then H_i (K x N_t) ~ CN(0, 1/K)
    EffectiveChannels<double> rayleigh_channels(Eigen::Index elements, Eigen::Index rx_antennas, Rng &rng,
                                                const CVectorD &tx_beam = CVectorD::Ones(1));

    // s_c H_o diag(e^{j phi} o h_eff) X for per-element drive X (K x T)
    CMatrixD propagate(const CMatrixD &H_o, const CVectorD &phases, const CVectorD &h_eff, const CMatrixD &X, std::complex<double> s_c);

    // Per-sample received signal, N_r x T
    CMatrixD simulate_rx(const Link &link, const SurfaceConfig<double> &surface, double sigma2, std::uint64_t noise_seed);

    // E_phi ||s_c H_o diag(phi) h_eff||^2 for uniformly random unit phases
    double incoherent_power(const CMatrixD &H_o, const CVectorD &h_eff, std::complex<double> s_c);

    struct IsotropyReport
    {
        double max_deviation = 0.0;
        std::vector<std::size_t> used;     // probe indices that entered the comparison
        std::vector<std::size_t> excluded; // probes in a pattern null
    };

    // Noiseless probe streams at each direction, pairwise compared after removing the complex scale
    IsotropyReport isotropy_check(const Link &link, const SurfaceConfig<double> &surface, const std::vector<Direction<double>> &probes,
                                  Diagnostics *diag = nullptr);

    struct SweepPoint
    {
        double axis = 0.0;
        double metric = 0.0;
        double ci_low = 0.0;
        double ci_high = 0.0;
        std::size_t trials = 0;
        std::size_t events = 0;  // bit errors for BER points
        std::size_t samples = 0; // bits for BER points
        bool flagged = false;    // fewer trials or bits than the configured minimum
    };

    struct SweepResult
    {
        std::string axis_name;
        std::string metric_name;
        std::vector<SweepPoint> points;
        std::vector<std::uint64_t> seeds; // master seed first, then per-point seeds
        std::optional<double> slope;      // log-log regression slope where meaningful
    };

    // 95% Wilson score interval for k successes in n trials
    std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

    struct BerSweepOptions
    {
        std::vector<double> snr_db;
        int order = 16;
        Precoding precoding = Precoding::ClosedForm;
        int trials = 200;
        std::size_t bits_per_point = 100000;
        int min_trials = 200;
        std::size_t min_bits = 100000;
        std::uint64_t seed = 1;
        bool noiseless = false; // sigma^2 = 0 regardless of SNR
    };

    SweepResult ber_sweep(const ScenarioConfig &cfg, const BerSweepOptions &options);

    struct DiversityOptions
    {
        std::vector<int> elements{8, 16, 32, 64, 128};
        int realizations = 200;
        int rx_antennas = 1;
        std::uint64_t seed = 1;
    };

    // Mean closed-form optimized power ||H_o Phi h_eff||^2 per K over Rayleigh draws, with the log-log slope
    SweepResult diversity_sweep(const DiversityOptions &options);

    struct TwoStreamReport
    {
        double sinr_before[2]{};
        double sinr_after[2]{};
        double evm_before_db[2]{};
        double evm_after_db[2]{};
        double ber_before[2]{};
        double ber_after[2]{};
        double sigma2 = 0.0;
        PhaseSolution<double> solution;
        CVectorD random_phases; // "before" baseline, length K
    };

    struct TwoStreamOptions
    {
        int order1 = 16;
        int order2 = 64;
        double snr_db = 25.0;
        std::size_t symbols = 10000;
        SubsurfaceSplit split = SubsurfaceSplit::Index;
        bool shared_h_eff = true;
        bool zero_cross = false; // force H_o^{12} = H_o^{21} = 0
        AlternatingOptions<double> optimizer;
        std::uint64_t seed = 1;
    };

    // Element indices of the two sub-surfaces
    std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> subsurface_indices(int rows, int cols, SubsurfaceSplit split);

    // Two receivers with rx_antennas each over Rayleigh channels; K = rows * cols must be even
    TwoStreamReport two_stream_experiment(const ScenarioConfig &cfg, const TwoStreamOptions &options);

    struct AmChainOptions
    {
        int order = 16;
        Eigen::Index symbols = 2000;
        double depth = 0.9; // fraction of the curve's magnitude span
        IFParams modem;
        PulseShape pulse;
        std::uint64_t seed = 1;
    };

    struct AmChainResult
    {
        double evm_calibrated_db = 0.0;
        double evm_uncalibrated_db = 0.0;
    };

    // QAM -> DUC -> magnitude modulation through a bias curve (predistorted or linear drive) -> DDC
    AmChainResult magnitude_chain_evm(const MagnitudeCurve &curve, const AmChainOptions &options);

    struct SpoofingResult
    {
        Spectrogram target;
        Eigen::VectorXd waveform;      // synthesized drive waveform
        Eigen::VectorXd magnitude;     // realized reflection magnitude alpha(t)
        std::vector<Spectrogram> recovered; // one per usable probe
        std::vector<double> fidelity;       // per probe, against the target
        double cross_fidelity = 1.0;        // minimum pairwise correlation between probes
    };

    struct SpoofingOptions
    {
        SynthesisOptions synthesis{PhasePolicy::Given, 1, 50};
        double depth = 0.9;
        bool calibrated = true;
        double snr_db = 200.0;
        std::uint64_t seed = 1;
    };

    // Template -> ISTFT -> drive -> magnitude curve -> surface -> probes -> envelope -> STFT
    SpoofingResult spoofing_chain(const Link &link, const DopplerTemplate &tpl, const MagnitudeCurve &curve,
                                  const std::vector<Direction<double>> &probes, const SpoofingOptions &options,
                                  Diagnostics *diag = nullptr);

    // Runs fn(i) for i in [0, n) on a worker pool; results must be written to per-index slots
    void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);
} // namespace msa

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

#include "msa/simulator.hpp"
#include "msa/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <thread>

namespace msa
{
    namespace
    {
        bool valid_qam_order(int order)
        {
            return order == 4 || order == 16 || order == 64 || order == 256 || order == 1024;
        }

        void check_direction(const Direction<double> &d, const std::string &field)
        {
            try
            {
                Direction<double>::make(d.theta, d.phi);
            }
            catch (const DomainError &e)
            {
                throw ConfigError(field, e.what());
            }
        }

        void check_path(const PathComponent<double> &p, const std::string &field)
        {
            try
            {
                p.validate();
            }
            catch (const DomainError &e)
            {
                throw ConfigError(field, e.what());
            }
        }

        // Phases for a link: closed form, or zeros if the channel is all-zero
        CVectorD closed_form_or_zero(const CMatrixD &H_o, const CVectorD &h)
        {
            try
            {
                return closed_form_phases<double>(H_o, h).phases[0];
            }
            catch (const DegenerateError &)
            {
                return CVectorD::Ones(h.size());
            }
        }

        // MRC over the receive antennas with known composite channel g
        Eigen::VectorXcd combine(const CVectorD &g, const CMatrixD &Y)
        {
            const double energy = g.squaredNorm();
            if (!(energy > 0))
                return Eigen::VectorXcd::Zero(Y.cols());
            return (g.adjoint() * Y).transpose() / energy;
        }
    } // namespace

    CVectorD ScenarioConfig::tx_beam_vector() const
    {
        if (tx_beam.empty())
            return CVectorD::Constant(tx_antennas, std::complex<double>(1.0 / std::sqrt(double(tx_antennas)), 0.0));
        CVectorD w(Eigen::Index(tx_beam.size()));
        for (size_t i = 0; i < tx_beam.size(); ++i)
            w(Eigen::Index(i)) = tx_beam[i];
        return w;
    }

    void ScenarioConfig::validate() const
    {
        if (rows < 1)
            throw ConfigError("surface.rows", "must be at least 1");
        if (cols < 1)
            throw ConfigError("surface.cols", "must be at least 1");
        if (!(spacing_m > 0))
            throw ConfigError("surface.spacing_m", "must be positive");
        if (!(carrier_hz > 0))
            throw ConfigError("carrier_hz", "must be positive");
        if (grid_theta < 1)
            throw ConfigError("surface.grid_theta", "must be at least 1");
        if (grid_phi < 1)
            throw ConfigError("surface.grid_phi", "must be at least 1");
        if (!(pattern_exponent >= 0))
            throw ConfigError("surface.pattern_exponent", "must be non-negative");
        if (phase_palette && phase_palette->empty())
            throw ConfigError("surface.phase_palette_rad", "must not be empty when given");
        if (phases_rad)
        {
            if (Eigen::Index(phases_rad->size()) != elements())
                throw ConfigError("surface.phases_rad", "has " + std::to_string(phases_rad->size()) + " entries for " +
                                                            std::to_string(elements()) + " elements");
            for (double a : *phases_rad)
                if (!std::isfinite(a))
                    throw ConfigError("surface.phases_rad", "phases must be finite");
        }
        if (tx_antennas < 1)
            throw ConfigError("terminals.tx_antennas", "must be at least 1");
        if (rx_antennas < 1)
            throw ConfigError("terminals.rx_antennas", "must be at least 1");
        if (!(terminal_spacing_wavelengths > 0))
            throw ConfigError("terminals.spacing_wavelengths", "must be positive");
        if (channel == ChannelModel::Paths && tx_paths.empty())
            throw ConfigError("channel.tx_paths", "the paths model needs at least one path");
        if (channel == ChannelModel::Paths && rx_paths.empty())
            throw ConfigError("channel.rx_paths", "the paths model needs at least one path");
        for (size_t i = 0; i < tx_paths.size(); ++i)
            check_path(tx_paths[i], "channel.tx_paths[" + std::to_string(i) + "]");
        for (size_t i = 0; i < rx_paths.size(); ++i)
            check_path(rx_paths[i], "channel.rx_paths[" + std::to_string(i) + "]");
        if (!tx_beam.empty())
        {
            if (tx_beam.size() != size_t(tx_antennas))
                throw ConfigError("terminals.tx_beam", "has " + std::to_string(tx_beam.size()) + " entries for " +
                                                           std::to_string(tx_antennas) + " antennas");
            if (std::abs(tx_beam_vector().norm() - 1.0) > 1e-9)
                throw ConfigError("terminals.tx_beam", "must have unit norm");
        }
        if (!std::isfinite(carrier_envelope.real()) || !std::isfinite(carrier_envelope.imag()))
            throw ConfigError("carrier_envelope", "must be finite");
        try
        {
            modem.validate();
        }
        catch (const DomainError &e)
        {
            throw ConfigError("modem", e.what());
        }
        try
        {
            pulse.validate();
        }
        catch (const DomainError &e)
        {
            throw ConfigError("modem.pulse", e.what());
        }
        if (!valid_qam_order(qam_order))
            throw ConfigError("modem.qam_order", "must be one of 4, 16, 64, 256, 1024");
        if (dac_bits < 1)
            throw ConfigError("modem.dac_bits", "must be at least 1");
        if (!(dac_full_scale > 0))
            throw ConfigError("modem.dac_full_scale", "must be positive");
        try
        {
            diode();
        }
        catch (const DomainError &e)
        {
            throw ConfigError("diode", e.what());
        }
        if (!(noise_sigma2 >= 0))
            throw ConfigError("noise_sigma2", "must be non-negative");

        if (ber.snr_db.empty())
            throw ConfigError("ber_sweep.snr_db", "must list at least one SNR");
        if (ber.trials < 1)
            throw ConfigError("ber_sweep.trials", "must be at least 1");
        if (ber.bits_per_point < 1)
            throw ConfigError("ber_sweep.bits_per_point", "must be at least 1");
        if (diversity.elements.empty())
            throw ConfigError("diversity_sweep.elements", "must list at least one element count");
        for (int k : diversity.elements)
            if (k < 1)
                throw ConfigError("diversity_sweep.elements", "element counts must be positive");
        if (diversity.realizations < 1)
            throw ConfigError("diversity_sweep.realizations", "must be at least 1");
        if (!valid_qam_order(two_stream.order1))
            throw ConfigError("two_stream.order1", "must be one of 4, 16, 64, 256, 1024");
        if (!valid_qam_order(two_stream.order2))
            throw ConfigError("two_stream.order2", "must be one of 4, 16, 64, 256, 1024");
        if (two_stream.symbols < 1)
            throw ConfigError("two_stream.symbols", "must be at least 1");
        if (two_stream.restarts < 1)
            throw ConfigError("two_stream.restarts", "must be at least 1");
        if (!(two_stream.tol > 0))
            throw ConfigError("two_stream.tol", "must be positive");
        if (two_stream.max_iter < 1)
            throw ConfigError("two_stream.max_iter", "must be at least 1");

        const auto &sig = sensing.signature;
        if (!(sig.sample_rate_hz > 0))
            throw ConfigError("sensing.sample_rate_hz", "must be positive");
        if (!(sig.duration_s > 0))
            throw ConfigError("sensing.duration_s", "must be positive");
        if (sig.window_length < 2)
            throw ConfigError("sensing.window_length", "must be at least 2");
        if (sig.hop < 1 || sig.hop > sig.window_length)
            throw ConfigError("sensing.hop", "must lie in [1, window_length]");
        if (sig.duration_s * sig.sample_rate_hz < double(sig.window_length))
            throw ConfigError("sensing.duration_s", "signal is shorter than one window");
        for (size_t i = 0; i < sig.rotors.size(); ++i)
        {
            const auto &r = sig.rotors[i];
            const std::string f = "sensing.rotors[" + std::to_string(i) + "]";
            if (r.blades < 1 || !(r.rate_hz >= 0) || !(r.max_doppler_hz >= 0))
                throw ConfigError(f, "needs at least one blade and non-negative rate and Doppler");
            if (sig.centre_hz + r.max_doppler_hz >= sig.sample_rate_hz / 2 || sig.centre_hz - r.max_doppler_hz <= 0)
                throw ConfigError(f + ".max_doppler_hz", "Doppler band leaves (0, Nyquist)");
        }
        for (size_t i = 0; i < sensing.probes.size(); ++i)
            check_direction(sensing.probes[i], "sensing.probes[" + std::to_string(i) + "]");
        if (sensing.phase_state != 0 && sensing.phase_state != 1)
            throw ConfigError("sensing.phase_state", "must be 0 or 1");
        if (!(sensing.depth > 0 && sensing.depth <= 1))
            throw ConfigError("sensing.depth", "must lie in (0, 1]");
    }

    Eigen::RowVectorXcd Link::probe_row(const Direction<double> &dir) const
    {
        const CVectorD a = steering_vector(positions, dir);
        const double f = CosinePattern<double>{pattern_exponent}(dir).real();
        return (f * a).adjoint();
    }

    EffectiveChannels<double> rayleigh_channels(Eigen::Index elements, Eigen::Index rx_antennas, Rng &rng, const CVectorD &tx_beam)
    {
        EffectiveChannels<double> eff;
        eff.H_o = complex_gaussian<double>(rx_antennas, elements, 1.0, rng);
        eff.H_i = complex_gaussian<double>(elements, tx_beam.size(), 1.0 / double(elements), rng);
        eff.h_eff = eff.H_i * tx_beam;
        return eff;
    }

    Link build_link(const ScenarioConfig &cfg, std::uint64_t realization_seed, Diagnostics *diag)
    {
        cfg.validate();
        Link link;
        link.s_c = cfg.carrier_envelope;
        link.pattern_exponent = cfg.pattern_exponent;
        link.geometry = ArrayGeometry<double>::make(cfg.rows, cfg.cols, cfg.spacing_m, cfg.wavelength_m());
        link.positions = element_positions(link.geometry);
        const CVectorD w_t = cfg.tx_beam_vector();

        switch (cfg.channel)
        {
        case ChannelModel::Paths:
        {
            link.grid = DirectionGrid<double>::hemisphere(cfg.grid_theta, cfg.grid_phi);
            const CMatrixD U = phase_difference_matrix(link.positions, *link.grid);
            const auto pattern = ElementPattern<double>::sample(CosinePattern<double>{cfg.pattern_exponent}, *link.grid);
            link.W = transform_matrix(U, pattern);
            const auto tx = TerminalArray<double>::ula(cfg.tx_antennas, cfg.terminal_spacing_wavelengths);
            const auto rx = TerminalArray<double>::ula(cfg.rx_antennas, cfg.terminal_spacing_wavelengths);
            link.H_tx_surface = channel_tx_to_surface<double>(std::span(cfg.tx_paths), *link.grid, tx, cfg.carrier_hz, diag);
            link.H_surface_rx = channel_surface_to_rx<double>(std::span(cfg.rx_paths), *link.grid, rx, cfg.carrier_hz, diag);
            link.eff = effective_channels(link.W, link.H_tx_surface, link.H_surface_rx, w_t);
            break;
        }
        case ChannelModel::Rayleigh:
        {
            Rng rng(realization_seed);
            link.eff = rayleigh_channels(link.geometry.size(), cfg.rx_antennas, rng, w_t);
            break;
        }
        case ChannelModel::Bypass:
            link.eff.H_i = w_t.adjoint();
            link.eff.h_eff = link.eff.H_i * w_t;
            link.eff.H_o = CMatrixD::Ones(cfg.rx_antennas, 1);
            break;
        }
        return link;
    }

    CMatrixD propagate(const CMatrixD &H_o, const CVectorD &phases, const CVectorD &h_eff, const CMatrixD &X, std::complex<double> s_c)
    {
        require_dims(H_o.cols() == phases.size() && phases.size() == h_eff.size(), "propagate: element counts disagree");
        require_dims(X.rows() == h_eff.size(), "propagate: drive has " + std::to_string(X.rows()) + " rows for " +
                                                   std::to_string(h_eff.size()) + " elements");
        const CVectorD gains = phases.cwiseProduct(h_eff);
        return s_c * (H_o * (gains.asDiagonal() * X));
    }

    CMatrixD simulate_rx(const Link &link, const SurfaceConfig<double> &surface, double sigma2, std::uint64_t noise_seed)
    {
        surface.validate();
        require_dims(surface.elements() == link.elements(), "surface has " + std::to_string(surface.elements()) +
                                                                 " elements, link has " + std::to_string(link.elements()));
        const CMatrixD y = propagate(link.eff.H_o, surface.phase_vector(), link.eff.h_eff,
                                     surface.magnitudes.cast<std::complex<double>>(), link.s_c);
        return add_noise<double>(y, sigma2, noise_seed);
    }

    double incoherent_power(const CMatrixD &H_o, const CVectorD &h_eff, std::complex<double> s_c)
    {
        require_dims(H_o.cols() == h_eff.size(), "incoherent_power: dimension mismatch");
        return std::norm(s_c) * (H_o.colwise().squaredNorm().transpose().cwiseProduct(h_eff.cwiseAbs2())).sum();
    }

    IsotropyReport isotropy_check(const Link &link, const SurfaceConfig<double> &surface, const std::vector<Direction<double>> &probes,
                                  Diagnostics *diag)
    {
        surface.validate();
        require_dims(surface.elements() == link.elements(), "surface and link disagree on the element count");
        require_dims(link.positions.cols() == link.elements(), "isotropy needs a link built on the array geometry");
        const CVectorD phi = surface.phase_vector();
        const CMatrixD X = surface.magnitudes.cast<std::complex<double>>();

        std::vector<Eigen::RowVectorXcd> streams;
        std::vector<double> norms;
        for (const auto &dir : probes)
        {
            const CMatrixD row = link.probe_row(dir);
            const CMatrixD s = propagate(row, phi, link.eff.h_eff, X, link.s_c);
            streams.push_back(s.row(0));
            norms.push_back(s.norm());
        }
        const double largest = norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
        IsotropyReport report;
        for (size_t p = 0; p < probes.size(); ++p)
        {
            if (!(norms[p] > 1e-12 * largest) || largest == 0.0)
            {
                report.excluded.push_back(p);
                note(diag, "probe " + std::to_string(p) + " lies in a pattern null; excluded from the isotropy check");
            }
            else
                report.used.push_back(p);
        }
        for (size_t a = 0; a < report.used.size(); ++a)
            for (size_t b = a + 1; b < report.used.size(); ++b)
            {
                const auto &sa = streams[report.used[a]];
                const auto &sb = streams[report.used[b]];
                // residual of s_a after removing its projection onto s_b, relative to |s_a|
                const std::complex<double> scale = sb.dot(sa) / sb.squaredNorm();
                const double dev = (sa - scale * sb).norm() / sa.norm();
                report.max_deviation = std::max(report.max_deviation, dev);
            }
        return report;
    }

    std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z)
    {
        if (n == 0)
            return {0.0, 1.0};
        const double p = double(k) / double(n);
        const double z2 = z * z;
        const double denom = 1.0 + z2 / double(n);
        const double centre = (p + z2 / (2.0 * double(n))) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / double(n) + z2 / (4.0 * double(n) * double(n))) / denom;
        return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
    }

    SweepResult ber_sweep(const ScenarioConfig &cfg, const BerSweepOptions &opt)
    {
        cfg.validate();
        if (opt.snr_db.empty())
            throw DomainError("ber_sweep: no SNR points");
        if (opt.trials < 1)
            throw DomainError("ber_sweep: at least one trial is required");
        const QamConstellation qam(opt.order);
        const std::size_t bps = std::size_t(qam.bits_per_symbol());
        const std::size_t symbols_per_trial = std::max<std::size_t>(1, (opt.bits_per_point + bps * std::size_t(opt.trials) - 1) /
                                                                            (bps * std::size_t(opt.trials)));
        const std::size_t trials = std::size_t(opt.trials);

        // realizations are shared by all SNR points (and by both precoding settings under the same seed)
        std::vector<Link> links;
        if (cfg.channel == ChannelModel::Rayleigh)
        {
            links.resize(trials);
            parallel_for(trials, [&](std::size_t t) { links[t] = build_link(cfg, mix_seed(opt.seed, t)); });
        }
        else
            links.push_back(build_link(cfg, opt.seed));
        const auto link_of = [&](std::size_t t) -> const Link & { return links[links.size() == 1 ? 0 : t]; };

        std::vector<CVectorD> phases(trials);
        parallel_for(trials, [&](std::size_t t) {
            const Link &link = link_of(t);
            if (opt.precoding == Precoding::ClosedForm)
                phases[t] = closed_form_or_zero(link.eff.H_o, link.eff.h_eff);
            else
            {
                Rng rng(mix_seed(mix_seed(opt.seed, t), 0x5EED));
                phases[t] = random_phasors<double>(link.elements(), rng);
            }
        });

        double reference = 0.0;
        for (std::size_t t = 0; t < trials; ++t)
            reference += incoherent_power(link_of(t).eff.H_o, link_of(t).eff.h_eff, link_of(t).s_c);
        reference /= double(trials);

        SweepResult result;
        result.axis_name = "snr_db";
        result.metric_name = "ber";
        result.seeds.push_back(opt.seed);
        for (size_t p = 0; p < opt.snr_db.size(); ++p)
        {
            const double snr = opt.snr_db[p];
            const double sigma2 = opt.noiseless ? 0.0 : reference / std::pow(10.0, snr / 10.0);
            const std::uint64_t point_seed = mix_seed(opt.seed, 1000003ULL + p);
            result.seeds.push_back(point_seed);
            std::vector<std::size_t> errors(trials, 0);
            parallel_for(trials, [&](std::size_t t) {
                const Link &link = link_of(t);
                Rng rng(mix_seed(point_seed, t));
                const Bits bits = random_bits(symbols_per_trial * bps, rng);
                const Eigen::VectorXcd x = qam.map(bits);
                const CVectorD g = link.s_c * (link.eff.H_o * phases[t].cwiseProduct(link.eff.h_eff));
                CMatrixD Y = g * x.transpose();
                if (sigma2 > 0)
                    Y += complex_gaussian<double>(Y.rows(), Y.cols(), sigma2, rng);
                errors[t] = bit_errors(bits, qam.demap(combine(g, Y)));
            });
            SweepPoint pt;
            pt.axis = snr;
            pt.trials = trials;
            pt.events = std::accumulate(errors.begin(), errors.end(), std::size_t(0));
            pt.samples = trials * symbols_per_trial * bps;
            pt.metric = double(pt.events) / double(pt.samples);
            std::tie(pt.ci_low, pt.ci_high) = wilson_interval(pt.events, pt.samples);
            pt.flagged = opt.trials < opt.min_trials || pt.samples < opt.min_bits;
            result.points.push_back(pt);
        }
        return result;
    }

    SweepResult diversity_sweep(const DiversityOptions &opt)
    {
        if (opt.elements.empty())
            throw DomainError("diversity_sweep: no element counts");
        if (opt.realizations < 1)
            throw DomainError("diversity_sweep: at least one realization is required");
        SweepResult result;
        result.axis_name = "elements";
        result.metric_name = "mean_power";
        result.seeds.push_back(opt.seed);
        const std::size_t n = std::size_t(opt.realizations);
        for (int K : opt.elements)
        {
            if (K < 1)
                throw DomainError("diversity_sweep: element counts must be positive");
            const std::uint64_t k_seed = mix_seed(opt.seed, std::uint64_t(K));
            result.seeds.push_back(k_seed);
            std::vector<double> power(n);
            parallel_for(n, [&](std::size_t r) {
                Rng rng(mix_seed(k_seed, r));
                const auto eff = rayleigh_channels(K, opt.rx_antennas, rng);
                power[r] = closed_form_phases<double>(eff.H_o, eff.h_eff).objective;
            });
            SweepPoint pt;
            pt.axis = double(K);
            pt.trials = n;
            pt.samples = n;
            pt.metric = std::accumulate(power.begin(), power.end(), 0.0) / double(n);
            double var = 0.0;
            for (double p : power)
                var += (p - pt.metric) * (p - pt.metric);
            var = n > 1 ? var / double(n - 1) : 0.0;
            const double half = 1.959963984540054 * std::sqrt(var / double(n));
            pt.ci_low = pt.metric - half;
            pt.ci_high = pt.metric + half;
            pt.flagged = opt.realizations < 200;
            result.points.push_back(pt);
        }
        if (result.points.size() >= 2)
        {
            Eigen::MatrixXd A(result.points.size(), 2);
            Eigen::VectorXd b(result.points.size());
            for (size_t i = 0; i < result.points.size(); ++i)
            {
                A(Eigen::Index(i), 0) = std::log(result.points[i].axis);
                A(Eigen::Index(i), 1) = 1.0;
                b(Eigen::Index(i)) = std::log(result.points[i].metric);
            }
            result.slope = A.colPivHouseholderQr().solve(b)(0);
        }
        return result;
    }

    std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> subsurface_indices(int rows, int cols, SubsurfaceSplit split)
    {
        const Eigen::Index K = Eigen::Index(rows) * cols;
        if (K % 2 != 0)
            throw DomainError("two-stream split needs an even element count, got " + std::to_string(K));
        std::vector<Eigen::Index> first, second;
        if (split == SubsurfaceSplit::Index)
        {
            for (Eigen::Index k = 0; k < K; ++k)
                (k < K / 2 ? first : second).push_back(k);
            return {first, second};
        }
        if (cols % 2 != 0)
            throw DomainError("column split needs an even column count, got " + std::to_string(cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                (j < cols / 2 ? first : second).push_back(Eigen::Index(i) * cols + j);
        return {first, second};
    }

    TwoStreamReport two_stream_experiment(const ScenarioConfig &cfg, const TwoStreamOptions &opt)
    {
        const auto [S1, S2] = subsurface_indices(cfg.rows, cfg.cols, opt.split);
        const Eigen::Index K = Eigen::Index(cfg.rows) * cfg.cols;
        const Eigen::Index half = K / 2;
        const Eigen::Index Nr = cfg.rx_antennas;
        const QamConstellation qam1(opt.order1), qam2(opt.order2);

        Rng rng(opt.seed);
        const CMatrixD H1 = complex_gaussian<double>(Nr, K, 1.0, rng); // rx 1
        const CMatrixD H2 = complex_gaussian<double>(Nr, K, 1.0, rng); // rx 2
        const CVectorD h1 = complex_gaussian<double>(half, 1, 1.0 / double(K), rng);
        const CVectorD h2 = opt.shared_h_eff ? h1 : CVectorD(complex_gaussian<double>(half, 1, 1.0 / double(K), rng));

        const auto columns = [](const CMatrixD &H, const std::vector<Eigen::Index> &idx) {
            CMatrixD out(H.rows(), Eigen::Index(idx.size()));
            for (size_t i = 0; i < idx.size(); ++i)
                out.col(Eigen::Index(i)) = H.col(idx[i]);
            return out;
        };
        const std::complex<double> s_c = cfg.carrier_envelope;
        const CMatrixD H11 = s_c * columns(H1, S1), H22 = s_c * columns(H2, S2);
        CMatrixD H12 = s_c * columns(H1, S2), H21 = s_c * columns(H2, S1);
        if (opt.zero_cross)
        {
            H12.setZero();
            H21.setZero();
        }

        TwoStreamReport rep;
        const double p1 = incoherent_power(H11, h1, 1.0), p2 = incoherent_power(H22, h2, 1.0);
        rep.sigma2 = 0.5 * (p1 + p2) / std::pow(10.0, opt.snr_db / 10.0);
        if (!(rep.sigma2 > 0))
            throw DegenerateError("two-stream desired channels carry no power");
        const auto ch = TwoStreamChannels<double>::from_blocks(H11, H12, H21, H22, h1, h2, rep.sigma2);

        const CVectorD r1 = random_phasors<double>(half, rng), r2 = random_phasors<double>(half, rng);
        rep.random_phases.resize(K);
        for (Eigen::Index i = 0; i < half; ++i)
        {
            rep.random_phases(S1[size_t(i)]) = r1(i);
            rep.random_phases(S2[size_t(i)]) = r2(i);
        }
        auto optimizer = opt.optimizer;
        optimizer.seed = mix_seed(opt.seed, 0xA0);
        rep.solution = alternating_optimize(ch, optimizer);

        const Bits bits1 = random_bits(opt.symbols * std::size_t(qam1.bits_per_symbol()), rng);
        const Bits bits2 = random_bits(opt.symbols * std::size_t(qam2.bits_per_symbol()), rng);
        CMatrixD S(2, Eigen::Index(opt.symbols));
        S.row(0) = qam1.map(bits1).transpose();
        S.row(1) = qam2.map(bits2).transpose();
        const CMatrixD N1 = complex_gaussian<double>(Nr, S.cols(), rep.sigma2, rng);
        const CMatrixD N2 = complex_gaussian<double>(Nr, S.cols(), rep.sigma2, rng);

        const auto evaluate = [&](const CVectorD &phi1, const CVectorD &phi2, int slot) {
            const auto sinr = stream_sinr(phi1, phi2, ch);
            // block-diagonal Lambda: sub-surface m carries stream m, so y = [B_m1 phi1, B_m2 phi2] [x1; x2]
            CMatrixD G1(Nr, 2), G2(Nr, 2);
            G1 << ch.b1 * phi1, ch.b2 * phi2;
            G2 << ch.c1 * phi1, ch.c2 * phi2;
            const CMatrixD Y1 = G1 * S + N1;
            const CMatrixD Y2 = G2 * S + N2;
            const Eigen::VectorXcd x1 = combine(G1.col(0), Y1);
            const Eigen::VectorXcd x2 = combine(G2.col(1), Y2);
            double *sinr_out = slot == 0 ? rep.sinr_before : rep.sinr_after;
            double *evm_out = slot == 0 ? rep.evm_before_db : rep.evm_after_db;
            double *ber_out = slot == 0 ? rep.ber_before : rep.ber_after;
            sinr_out[0] = sinr.sinr1;
            sinr_out[1] = sinr.sinr2;
            evm_out[0] = evm_db(x1, S.row(0).transpose());
            evm_out[1] = evm_db(x2, S.row(1).transpose());
            ber_out[0] = ber(bits1, qam1.demap(x1));
            ber_out[1] = ber(bits2, qam2.demap(x2));
        };
        evaluate(r1, r2, 0);
        evaluate(rep.solution.phases[0], rep.solution.phases[1], 1);
        return rep;
    }

    AmChainResult magnitude_chain_evm(const MagnitudeCurve &curve, const AmChainOptions &opt)
    {
        const Predistortion inverse = calibrate_predistortion(curve);
        const QamConstellation qam(opt.order);
        Rng rng(opt.seed);
        const Bits bits = random_bits(std::size_t(opt.symbols) * std::size_t(qam.bits_per_symbol()), rng);
        const Eigen::VectorXcd symbols = qam.map(bits);
        const IFWaveform wave = duc(symbols, opt.modem, opt.pulse);
        const double peak = wave.samples.cwiseAbs().maxCoeff();
        if (!(peak > 0))
            throw DegenerateError("magnitude chain: IF waveform is identically zero");
        const double centre = 0.5 * (inverse.m_min() + inverse.m_max());
        const double swing = 0.5 * (inverse.m_max() - inverse.m_min()) * opt.depth;

        const auto run = [&](bool calibrated) {
            IFWaveform rx = wave;
            for (Eigen::Index i = 0; i < wave.size(); ++i)
            {
                const double target = std::clamp(centre + swing * wave.samples(i) / peak, inverse.m_min(), inverse.m_max());
                const double drive = calibrated ? inverse(target) : linear_drive(target, curve);
                rx.samples(i) = (curve(drive) - centre) / swing * peak;
            }
            return distortion_metrics(symbols, ddc(rx, opt.modem, opt.pulse, symbols.size())).evm_db;
        };
        return {run(true), run(false)};
    }

    SpoofingResult spoofing_chain(const Link &link, const DopplerTemplate &tpl, const MagnitudeCurve &curve,
                                  const std::vector<Direction<double>> &probes, const SpoofingOptions &opt, Diagnostics *diag)
    {
        if (probes.empty())
            throw DomainError("spoofing chain needs at least one probe direction");
        require_dims(link.positions.cols() == link.elements(), "spoofing chain needs a link built on the array geometry");
        const Predistortion inverse = calibrate_predistortion(curve);

        SpoofingResult out;
        out.target = doppler_signature(tpl);
        out.waveform = istft_synthesize(out.target, opt.synthesis);
        const double peak = out.waveform.cwiseAbs().maxCoeff();
        if (!(peak > 0))
            throw DegenerateError("spoofing chain: synthesized waveform is identically zero");

        const double centre = 0.5 * (inverse.m_min() + inverse.m_max());
        const double swing = 0.5 * (inverse.m_max() - inverse.m_min()) * opt.depth;
        out.magnitude.resize(out.waveform.size());
        for (Eigen::Index i = 0; i < out.waveform.size(); ++i)
        {
            const double target = std::clamp(centre + swing * out.waveform(i) / peak, inverse.m_min(), inverse.m_max());
            const double drive = opt.calibrated ? inverse(target) : linear_drive(target, curve);
            out.magnitude(i) = curve(drive);
        }

        const CVectorD phi = closed_form_or_zero(link.eff.H_o, link.eff.h_eff);
        RVector<double> angles(phi.size());
        for (Eigen::Index k = 0; k < phi.size(); ++k)
            angles(k) = std::arg(phi(k));
        const auto surface = SurfaceConfig<double>::uniform(out.magnitude, angles);

        std::vector<Eigen::VectorXd> envelopes;
        std::vector<double> gains;
        for (const auto &dir : probes)
        {
            const CMatrixD row = link.probe_row(dir);
            gains.push_back(std::abs((row * phi.cwiseProduct(link.eff.h_eff))(0, 0)));
        }
        const double largest = *std::max_element(gains.begin(), gains.end());
        for (size_t p = 0; p < probes.size(); ++p)
        {
            if (!(gains[p] > 1e-12 * largest) || largest == 0.0)
            {
                note(diag, "probe " + std::to_string(p) + " lies in a pattern null; no signature recovered there");
                continue;
            }
            CMatrixD y = propagate(link.probe_row(probes[p]), phi, link.eff.h_eff,
                                   surface.magnitudes.cast<std::complex<double>>(), link.s_c);
            if (std::isfinite(opt.snr_db))
            {
                const double sigma2 = y.squaredNorm() / double(y.size()) / std::pow(10.0, opt.snr_db / 10.0);
                y = add_noise<double>(y, sigma2, mix_seed(opt.seed, p));
            }
            Eigen::VectorXd envelope = y.row(0).cwiseAbs().transpose();
            envelope.array() -= envelope.mean();
            out.recovered.push_back(stft(envelope, tpl.sample_rate_hz, tpl.window_length, tpl.hop, dsp::Window::Hann));
            out.fidelity.push_back(signature_fidelity(out.target, out.recovered.back()));
        }
        for (size_t a = 0; a < out.recovered.size(); ++a)
            for (size_t b = a + 1; b < out.recovered.size(); ++b)
                out.cross_fidelity = std::min(out.cross_fidelity, signature_fidelity(out.recovered[a], out.recovered[b]));
        return out;
    }

    void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn)
    {
        const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
        for (auto &t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }
} // namespace msa

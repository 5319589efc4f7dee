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

// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.
// Optional arguments select criteria by number.

#include "msa/config.hpp"
#include "msa/dsp.hpp"
#include "msa/io.hpp"
#include "msa/simulator.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace msa;
using cd = std::complex<double>;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::ostringstream detail;

        void require(bool ok, const std::string &what)
        {
            if (!ok)
            {
                pass = false;
                detail << " [fail: " << what << "]";
            }
        }
    };

    double db(double x) { return 10.0 * std::log10(x); }

    // AC1
    void rate_table(Outcome &out)
    {
        struct Row
        {
            double fs;
            int sps;
            double mbps;
        };
        const Row rows[] = {{2e6, 10, 1.6}, {10e6, 10, 8.0}, {10e6, 8, 10.0}, {20e6, 8, 20.0}};
        Rng rng(1);
        for (const auto &r : rows)
        {
            const double got = rate_params(r.fs, r.sps, 256).data_rate / 1e6;
            out.detail << " " << r.fs / 1e6 << "MHz/" << r.sps << "->" << got << "Mbps";
            out.require(std::abs(got - r.mbps) <= 1e-12 * r.mbps, "rate row");

            // and the modem actually runs error free at that clock
            IFParams p;
            p.sample_rate_hz = r.fs;
            p.samples_per_symbol = r.sps;
            p.f_if_hz = r.fs / 4.0;
            const QamConstellation q(256);
            const Bits bits = random_bits(8 * 500, rng);
            const auto rx = ddc(duc(q.map(bits), p, PulseShape{}), p, PulseShape{}, 500);
            out.require(ber(bits, q.demap(rx)) == 0.0, "noiseless round trip at this rate");
        }
    }

    SurfaceConfig<double> random_uniform_surface(Eigen::Index K, Eigen::Index T, Rng &rng)
    {
        std::uniform_real_distribution<double> a(0.05, 1.0), p(-pi<double>, pi<double>);
        RVector<double> alpha(T), phases(K);
        for (Eigen::Index t = 0; t < T; ++t)
            alpha(t) = a(rng);
        for (Eigen::Index k = 0; k < K; ++k)
            phases(k) = p(rng);
        return SurfaceConfig<double>::uniform(alpha, phases);
    }

    // AC2
    void isotropy(Outcome &out)
    {
        std::vector<Direction<double>> probes;
        for (int i = 0; i < 8; ++i)
            probes.push_back(Direction<double>::make(0.05 + 0.18 * i, std::fmod(0.9 * i, two_pi<double>)));
        for (auto [rows, cols] : {std::pair{2, 2}, std::pair{16, 10}})
        {
            ScenarioConfig cfg;
            cfg.rows = rows;
            cfg.cols = cols;
            const Link link = build_link(cfg, 0);
            Rng rng(std::uint64_t(rows * cols));
            const auto rep = isotropy_check(link, random_uniform_surface(link.elements(), 200, rng), probes);
            out.detail << " K=" << rows * cols << " dev=" << rep.max_deviation << " probes=" << rep.used.size();
            out.require(rep.used.size() == probes.size(), "every probe usable");
            out.require(rep.max_deviation <= 1e-10, "deviation");
        }
    }

    // AC3
    void closed_form_near_optimal(Outcome &out)
    {
        double worst = 0.0;
        int misses = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            Rng rng(seed);
            const auto ch = rayleigh_channels(4, 2, rng);
            const auto sol = closed_form_phases(ch.H_o, ch.h_eff);
            const auto best = exhaustive_phase_oracle<double>(
                [&](const CVector<double> &phi) { return oracle::received_power(ch.H_o, phi, ch.h_eff); }, 4, 32);
            const double gap = db(best.value / sol.objective);
            worst = std::max(worst, gap);
            if (gap > 0.5)
            {
                ++misses;
                out.detail << " seed" << seed << "_gap=" << gap << "dB";
            }
        }
        out.detail << " worst_gap=" << worst << "dB misses=" << misses << "/20";
        out.require(misses == 0, "closed form within 0.5 dB of the 32-level optimum");
    }

    // AC4
    void diversity(Outcome &out)
    {
        const auto r = diversity_sweep(DiversityOptions{});
        for (const auto &p : r.points)
            out.detail << " K" << p.axis << "=" << p.metric;
        out.require(r.slope.has_value(), "slope available");
        if (r.slope)
        {
            out.detail << " slope=" << *r.slope;
            out.require(*r.slope >= 0.9 && *r.slope <= 1.1, "slope in [0.9, 1.1]");
        }
    }

    TwoStreamChannels<double> random_two_stream(Eigen::Index half, std::uint64_t seed, double sigma2)
    {
        Rng rng(seed);
        TwoStreamChannels<double> ch;
        ch.b1 = complex_gaussian<double>(1, half, 1.0, rng);
        ch.b2 = complex_gaussian<double>(1, half, 1.0, rng);
        ch.c1 = complex_gaussian<double>(1, half, 1.0, rng);
        ch.c2 = complex_gaussian<double>(1, half, 1.0, rng);
        ch.sigma2 = sigma2;
        return ch;
    }

    double oracle_sum_sinr(const CVector<double> &p1, const CVector<double> &p2, const TwoStreamChannels<double> &ch)
    {
        const CVector<double> ones = CVector<double>::Ones(p1.size());
        return oracle::received_power(ch.b1, p1, ones) / (oracle::received_power(ch.b2, p2, ones) + ch.sigma2) +
               oracle::received_power(ch.c2, p2, ones) / (oracle::received_power(ch.c1, p1, ones) + ch.sigma2);
    }

    // AC5
    void alternating_solver(Outcome &out)
    {
        int non_monotone = 0;
        double worst_zero_cross = 0.0, worst_joint = 0.0, worst_grad = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            AlternatingOptions<double> opt;
            opt.seed = seed;
            opt.check_invariants = true;

            const auto ch = random_two_stream(16, seed, 0.1);
            const auto sol = alternating_optimize(ch, opt);
            for (size_t i = 1; i < sol.objective_trace.size(); ++i)
                non_monotone += sol.objective_trace[i] < sol.objective_trace[i - 1];

            auto free = ch;
            free.b2.setZero();
            free.c1.setZero();
            const auto zsol = alternating_optimize(free, opt);
            const double per_stream = closed_form_phases<double>(free.b1, CVector<double>::Ones(16)).objective / free.sigma2 +
                                      closed_form_phases<double>(free.c2, CVector<double>::Ones(16)).objective / free.sigma2;
            worst_zero_cross = std::max(worst_zero_cross, std::abs(db(zsol.objective / per_stream)));

            const auto small = random_two_stream(2, seed + 1000, 0.1);
            const auto ssol = alternating_optimize(small, opt);
            const auto joint = exhaustive_phase_oracle<double>(
                [&](const CVector<double> &phi) { return oracle_sum_sinr(phi.head(2), phi.tail(2), small); }, 4, 16);
            worst_joint = std::max(worst_joint, db(joint.value / ssol.objective));

            Rng rng(seed + 2000);
            const CVector<double> p1 = random_phasors<double>(16, rng), p2 = random_phasors<double>(16, rng);
            const CVector<double> g1 = euclidean_gradient_phi1(p1, p2, ch), g2 = euclidean_gradient_phi2(p1, p2, ch);
            const auto fd1 = oracle::fd_gradient([&](const Eigen::VectorXcd &z) { return oracle_sum_sinr(z, p2, ch); }, p1);
            const auto fd2 = oracle::fd_gradient([&](const Eigen::VectorXcd &z) { return oracle_sum_sinr(p1, z, ch); }, p2);
            worst_grad = std::max({worst_grad, (g1 - fd1).norm() / g1.norm(), (g2 - fd2).norm() / g2.norm()});
        }
        out.detail << " non_monotone_steps=" << non_monotone << " zero_cross_gap=" << worst_zero_cross
                   << "dB joint_gap=" << worst_joint << "dB grad_rel_err=" << worst_grad;
        out.require(non_monotone == 0, "monotone traces");
        out.require(worst_zero_cross <= 0.1, "zero-cross within 0.1 dB");
        out.require(worst_joint <= 1.0, "joint exhaustive gap within 1 dB");
        out.require(worst_grad <= 1e-5, "gradient matches finite differences");
    }

    // AC6
    void two_stream(Outcome &out)
    {
        const ScenarioConfig cfg;
        int improved = 0;
        double worst_ber[2] = {0.0, 0.0}, min_gain[2] = {1e300, 1e300};
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            TwoStreamOptions opt;
            opt.order1 = cfg.two_stream.order1;
            opt.order2 = cfg.two_stream.order2;
            opt.snr_db = cfg.two_stream.snr_db;
            opt.symbols = cfg.two_stream.symbols;
            opt.split = cfg.two_stream.split;
            opt.shared_h_eff = cfg.two_stream.shared_h_eff;
            opt.optimizer.restarts = cfg.two_stream.restarts;
            opt.optimizer.tol = cfg.two_stream.tol;
            opt.optimizer.max_iter = cfg.two_stream.max_iter;
            opt.seed = seed;
            const auto rep = two_stream_experiment(cfg, opt);
            bool both = true;
            for (int s = 0; s < 2; ++s)
            {
                both = both && rep.sinr_after[s] > rep.sinr_before[s];
                worst_ber[s] = std::max(worst_ber[s], rep.ber_after[s]);
                min_gain[s] = std::min(min_gain[s], db(rep.sinr_after[s] / rep.sinr_before[s]));
            }
            improved += both;
            if (!both || rep.ber_after[0] >= 1e-3 || rep.ber_after[1] >= 1e-3)
                out.detail << " seed" << seed << "(sinr " << db(rep.sinr_after[0]) << "/" << db(rep.sinr_after[1]) << " dB, ber "
                           << rep.ber_after[0] << "/" << rep.ber_after[1] << ")";
        }
        out.detail << " improved=" << improved << "/20 min_gain=" << min_gain[0] << "/" << min_gain[1]
                   << "dB worst_ber=" << worst_ber[0] << "/" << worst_ber[1];
        out.require(improved == 20, "both SINRs improve on every seed");
        out.require(worst_ber[0] < 1e-3 && worst_ber[1] < 1e-3, "both streams below 1e-3 BER");
    }

    // AC7
    void modem_chain(Outcome &out)
    {
        Rng rng(7);
        const IFParams p;
        const QamConstellation q256(256);
        const Bits bits = random_bits(100000, rng);
        const auto sym = q256.map(bits);
        const auto rx = ddc(duc(sym, p, PulseShape{}), p, PulseShape{}, sym.size());
        const double noiseless = ber(bits, q256.demap(rx));
        out.detail << " noiseless_ber=" << noiseless;
        out.require(noiseless == 0.0, "noiseless 256-QAM");

        // rectangular pulses at f_IF = fs / 4: per-symbol noise is exactly 4 sigma_w^2 / sps
        const auto rect = PulseShape::rectangular();
        const std::size_t target_bits = 4000000, chunk_symbols = 100000;
        int checked = 0;
        for (int order : {16, 256})
        {
            const QamConstellation q(order);
            const int m = q.bits_per_symbol();
            for (double snr_db = 8.0; snr_db <= 34.0; snr_db += 1.0)
            {
                const double sigma2 = std::pow(10.0, -snr_db / 10.0);
                const double analytic = oracle::gray_qam_ber(order, sigma2);
                if (analytic < 1e-4 || analytic > 1e-2)
                    continue;
                const double sigma_w2 = double(p.samples_per_symbol) * sigma2 / 4.0;
                std::size_t errors = 0, total = 0;
                while (total < target_bits)
                {
                    const Bits b = random_bits(chunk_symbols * std::size_t(m), rng);
                    auto w = duc(q.map(b), p, rect);
                    w.samples = add_real_noise(w.samples, sigma_w2, rng);
                    const Bits got = q.demap(ddc(w, p, rect, Eigen::Index(chunk_symbols)));
                    for (size_t i = 0; i < b.size(); ++i)
                        errors += b[i] != got[i];
                    total += b.size();
                }
                const double measured = double(errors) / double(total);
                const double rel = std::abs(measured - analytic) / analytic;
                ++checked;
                out.detail << " " << order << "QAM@" << snr_db << "dB:" << measured << "/" << analytic;
                out.require(rel <= 0.2, std::to_string(order) + "-QAM point within 20%");
            }
        }
        out.require(checked >= 4, "analytic points in range");
    }

    double out_of_band_fraction(const IFWaveform &w, const IFParams &p, double rolloff)
    {
        const auto psd = dsp::welch(w.samples, w.sample_rate_hz, 1024);
        const double edge = (1.0 + rolloff) / (2.0 * p.symbol_period_s());
        double oob = 0.0, total = 0.0;
        for (Eigen::Index i = 0; i < psd.power.size(); ++i)
        {
            total += psd.power(i);
            if (std::abs(psd.frequency_hz(i) - p.f_if_hz) > edge)
                oob += psd.power(i);
        }
        return oob / total;
    }

    // AC8
    void harmonic_suppression(Outcome &out)
    {
        Rng rng(8);
        const IFParams p;
        const QamConstellation q(256);
        const auto sym = q.map(random_bits(8 * 50000, rng));
        const PulseShape rc;
        const double f_rc = out_of_band_fraction(duc(sym, p, rc), p, rc.rolloff);
        const double f_rect = out_of_band_fraction(duc(sym, p, PulseShape::rectangular()), p, rc.rolloff);
        const double suppression = db(f_rect / f_rc);
        out.detail << " oob_rc=" << db(f_rc) << "dB oob_rect=" << db(f_rect) << "dB suppression=" << suppression << "dB";
        out.require(suppression >= 20.0, "suppression of at least 20 dB");
    }

    // AC9
    void mixer_model(Outcome &out)
    {
        double worst_taylor = 0.0;
        for (double bias : {0.0, 0.05})
        {
            const auto d = DiodeModel::at_bias(5e-6, 38.7, bias);
            for (int i = -1000; i <= 1000; ++i)
            {
                if (i == 0)
                    continue;
                const double v = 0.1 * double(i) / 1000.0 / d.alpha_d_per_v;
                const double e = diode_current(v, d, DiodeMode::Exact);
                worst_taylor = std::max(worst_taylor, std::abs(diode_current(v, d, DiodeMode::Taylor2) - e) / std::abs(e));
            }
        }
        out.detail << " taylor_rel_err=" << worst_taylor;
        out.require(worst_taylor < 0.01, "Taylor error below 1%");

        const auto d = DiodeModel::at_bias(5e-6, 38.7, 0.0);
        const double fs = 1e6;
        const Eigen::Index n = 20000;
        IFWaveform a, b;
        a.sample_rate_hz = b.sample_rate_hz = fs;
        a.samples.resize(n);
        b.samples.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            a.samples(i) = std::cos(two_pi<double> * 125e3 * double(i) / fs);
            b.samples(i) = std::cos(two_pi<double> * 20e3 * double(i) / fs);
        }
        const auto rf = mix(a, b, d);
        const double expect = 1.0 / (2.0 * d.second_order_resistance_ohm);
        double worst_tone = 0.0;
        for (double f : {105e3, 145e3})
        {
            const double amp = std::abs(oracle::dft_bin(rf.samples, f / fs * double(n))) * 2.0 / double(n);
            worst_tone = std::max(worst_tone, std::abs(amp - expect) / expect);
        }
        out.detail << " tone_rel_err=" << worst_tone;
        out.require(worst_tone <= 1e-6, "product tones at 1/(2 R_d')");

        const auto chain = magnitude_chain_evm(diode_reflection_curve(d, 50.0, 0.0, 0.1), AmChainOptions{});
        const double gain = chain.evm_uncalibrated_db - chain.evm_calibrated_db;
        out.detail << " evm_uncal=" << chain.evm_uncalibrated_db << "dB evm_cal=" << chain.evm_calibrated_db << "dB gain=" << gain
                   << "dB";
        out.require(gain >= 10.0, "calibration gains at least 10 dB");
    }

    // AC10
    void spoofing(Outcome &out)
    {
        const ScenarioConfig cfg;
        const Link link = build_link(cfg, cfg.seed);
        SpoofingOptions opt;
        opt.depth = cfg.sensing.depth;
        opt.calibrated = cfg.sensing.calibrated;
        opt.snr_db = cfg.sensing.snr_db;
        opt.seed = cfg.seed;
        const auto res = spoofing_chain(link, cfg.sensing.signature, default_state_curve(cfg.sensing.phase_state), cfg.sensing.probes, opt);
        out.require(res.fidelity.size() == 2, "both probes recovered");
        for (double f : res.fidelity)
        {
            out.detail << " fidelity=" << f;
            out.require(f >= 0.95, "fidelity at least 0.95");
        }
        out.detail << " cross=" << res.cross_fidelity;
        out.require(res.cross_fidelity >= 0.999, "probes agree to 0.999");
    }

    int run_cli(const std::string &args)
    {
        const std::string cmd = std::string("\"") + MSA_CLI_PATH + "\" " + args + " --quiet >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    // AC11
    void reproducibility(Outcome &out)
    {
        const fs::path dir = fs::temp_directory_path() / ("msa_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        ScenarioConfig cfg;
        cfg.rows = 4;
        cfg.cols = 4;
        cfg.channel = ChannelModel::Rayleigh;
        cfg.ber.trials = 50;
        cfg.ber.bits_per_point = 20000;
        cfg.seed = 2024;
        io::write_text(dir / "scenario.json", emit_config(cfg));

        for (const char *sub : {"ber-sweep", "diversity-sweep"})
        {
            const fs::path run = dir / sub;
            const int first = run_cli(std::string(sub) + " --config " + (dir / "scenario.json").string() + " --out " + run.string());
            out.require(first == 0, std::string(sub) + " ran");
            if (first != 0)
                continue;
            const int again = run_cli("rerun --manifest " + (run / "manifest.json").string());
            out.detail << " " << sub << ":rerun_exit=" << again;
            out.require(again == 0, std::string(sub) + " rerun matches its manifest");
            const auto man = io::read_manifest(run / "manifest.json");
            for (const auto &rec : man.outputs)
            {
                const bool same = io::read_text(run / rec.file) == io::read_text(run / "rerun" / rec.file);
                out.require(same, rec.file + " byte-identical");
            }
            out.detail << " files=" << man.outputs.size();
        }
        fs::remove_all(dir);
    }

    struct Criterion
    {
        int id;
        const char *name;
        double budget_s;
        std::function<void(Outcome &)> run;
    };
} // namespace

int main(int argc, char **argv)
{
    const std::vector<Criterion> criteria{
        {1, "rate table", 1.0, rate_table},
        {2, "isotropy", 10.0, isotropy},
        {3, "closed-form near-optimality", 300.0, closed_form_near_optimal},
        {4, "diversity scaling", 120.0, diversity},
        {5, "alternating optimization", 300.0, alternating_solver},
        {6, "two-stream cancellation", 300.0, two_stream},
        {7, "modem chain", 120.0, modem_chain},
        {8, "harmonic suppression", 30.0, harmonic_suppression},
        {9, "mixer model", 60.0, mixer_model},
        {10, "spoofing chain", 60.0, spoofing},
        {11, "reproducibility", 600.0, reproducibility},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto &c : criteria)
    {
        if (!selected.empty() && !selected.count(c.id))
            continue;
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            c.run(out);
        }
        catch (const std::exception &e)
        {
            out.pass = false;
            out.detail << " [exception: " << e.what() << "]";
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c.budget_s)
            out.require(false, "runtime over budget");
        failures += !out.pass;
        std::printf("AC%-2d %s  %s (%.2fs of %.0fs):%s\n", c.id, out.pass ? "PASS" : "FAIL", c.name, elapsed, c.budget_s,
                    out.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures;
}

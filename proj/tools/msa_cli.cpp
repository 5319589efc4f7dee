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

// msa command-line driver.
//
//   msa <simulate|precode|ber-sweep|diversity-sweep|two-stream|sense> [--config f] [--out d] [--seed n] [--trials n] [--quiet]
//   msa rerun --manifest <run>/manifest.json [--out d] [--quiet]
//
// Precedence: flags > config file > built-in defaults. The output directory falls back to $MSA_OUT_DIR,
// then ./msa_out. manifest.json is written last; on any failure every file this run wrote is removed.

#include "msa/config.hpp"
#include "msa/errors.hpp"
#include "msa/io.hpp"
#include "msa/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace
{
    using namespace msa;
    namespace fs = std::filesystem;
    using json = nlohmann::ordered_json;

    struct Flags
    {
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        bool quiet = false;
        std::string manifest;
    };

    // Tracks every file a run creates so a failure can remove them
    class Run
    {
    public:
        Run(fs::path dir, bool quiet) : dir_(std::move(dir)), quiet_(quiet) {}

        const fs::path &dir() const { return dir_; }

        fs::path claim(const std::string &file)
        {
            files_.push_back(file);
            return dir_ / file;
        }

        void json_file(const std::string &file, const json &j) { io::write_text(claim(file), j.dump(2) + "\n"); }

        void log(const std::string &line) const
        {
            if (!quiet_)
                std::cerr << line << "\n";
        }

        // Re-read every output; CSVs must parse
        std::vector<io::OutputRecord> validate() const
        {
            std::vector<io::OutputRecord> out;
            for (const auto &f : files_)
            {
                if (fs::path(f).extension() == ".csv")
                    io::read_csv(dir_ / f);
                out.push_back(io::describe_output(dir_, f));
            }
            return out;
        }

        void remove_all() const
        {
            std::error_code ec;
            for (const auto &f : files_)
                fs::remove(dir_ / f, ec);
            fs::remove(dir_ / "manifest.json", ec);
        }

    private:
        fs::path dir_;
        bool quiet_;
        std::vector<std::string> files_;
    };

    json diagnostics_json(const Diagnostics &diag)
    {
        return json(diag);
    }

    std::vector<double> angles_of(const CVectorD &phi)
    {
        std::vector<double> a(size_t(phi.size()));
        for (Eigen::Index k = 0; k < phi.size(); ++k)
            a[size_t(k)] = wrap_two_pi(std::arg(phi(k)));
        return a;
    }

    Eigen::MatrixXd column(const std::vector<double> &v)
    {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    }

    CVectorD link_phases(const Link &link)
    {
        try
        {
            return closed_form_phases<double>(link.eff.H_o, link.eff.h_eff).phases[0];
        }
        catch (const DegenerateError &)
        {
            return CVectorD::Ones(link.elements());
        }
    }

    std::vector<std::uint64_t> run_simulate(const ScenarioConfig &cfg, Run &run)
    {
        Diagnostics diag;
        const Link link = build_link(cfg, cfg.seed, &diag);
        const Eigen::Index K = link.elements();
        RVector<double> angles(K);
        if (cfg.phases_rad && cfg.channel != ChannelModel::Bypass)
            angles = column(*cfg.phases_rad);
        else
            for (Eigen::Index k = 0; k < K; ++k)
                angles(k) = std::arg(link_phases(link)(k));

        SurfaceConfig<double> surface;
        surface.phases = angles;
        surface.palette = cfg.phase_palette;
        surface.magnitudes = cfg.magnitudes_file.empty() ? Eigen::MatrixXd::Ones(K, 1) : io::read_magnitudes(cfg.magnitudes_file);
        if (cfg.phase_palette)
            for (Eigen::Index k = 0; k < K; ++k)
            {
                // snap to the nearest palette entry so the surface state is realizable
                double best = (*cfg.phase_palette)[0];
                for (double p : *cfg.phase_palette)
                    if (std::abs(wrap_pi(p - angles(k))) < std::abs(wrap_pi(best - angles(k))))
                        best = p;
                surface.phases(k) = best;
            }
        const std::uint64_t noise_seed = mix_seed(cfg.seed, 7);
        const CMatrixD y = simulate_rx(link, surface, cfg.noise_sigma2, noise_seed);

        io::write_complex_csv(run.claim("h_eff.csv"), link.eff.h_eff);
        io::write_complex_csv(run.claim("H_o.csv"), link.eff.H_o);
        io::write_complex_csv(run.claim("H_i.csv"), link.eff.H_i);
        io::write_csv(run.claim("phases.csv"), {"phase_rad"}, surface.phases);
        io::write_complex_csv(run.claim("rx.csv"), y.transpose());
        run.json_file("summary.json", {{"elements", K},
                                       {"samples", surface.samples()},
                                       {"received_power", y.squaredNorm() / double(std::max<Eigen::Index>(1, y.cols()))},
                                       {"incoherent_power", incoherent_power(link.eff.H_o, link.eff.h_eff, link.s_c)},
                                       {"noise_sigma2", cfg.noise_sigma2},
                                       {"diagnostics", diagnostics_json(diag)}});
        return {cfg.seed, noise_seed};
    }

    std::vector<std::uint64_t> run_precode(const ScenarioConfig &cfg, Run &run)
    {
        Diagnostics diag;
        const Link link = build_link(cfg, cfg.seed, &diag);
        PhaseSolution<double> sol = closed_form_phases<double>(link.eff.H_o, link.eff.h_eff);
        if (cfg.phase_palette)
            sol = quantize_phases<double>(sol, *cfg.phase_palette, [&](const std::vector<CVectorD> &phi) {
                return received_power<double>(link.eff.H_o, phi[0], link.eff.h_eff);
            });
        const auto angles = angles_of(sol.phases[0]);
        io::write_csv(run.claim("phases.csv"), {"phase_rad"}, column(angles));
        run.json_file("precode.json", {{"objective", sol.objective},
                                       {"upper_bound", sol.upper_bound},
                                       {"iterations", sol.iterations},
                                       {"converged", sol.converged},
                                       {"quantized", sol.quantized},
                                       {"objective_trace", sol.objective_trace},
                                       {"phases_rad", angles},
                                       {"diagnostics", diagnostics_json(diag)}});
        return {cfg.seed};
    }

    std::vector<std::uint64_t> run_ber(const ScenarioConfig &cfg, Run &run)
    {
        BerSweepOptions opt;
        opt.snr_db = cfg.ber.snr_db;
        opt.order = cfg.qam_order;
        opt.precoding = cfg.ber.precoding;
        opt.trials = cfg.ber.trials;
        opt.bits_per_point = cfg.ber.bits_per_point;
        opt.seed = cfg.seed;
        const SweepResult sweep = ber_sweep(cfg, opt);
        for (const auto &p : sweep.points)
            if (p.flagged)
                run.log("warning: SNR " + io::format_number(p.axis) + " dB ran below the minimum trials or bits");
        io::write_sweep_csv(run.claim("ber.csv"), sweep);
        return sweep.seeds;
    }

    std::vector<std::uint64_t> run_diversity(const ScenarioConfig &cfg, Run &run)
    {
        DiversityOptions opt;
        opt.elements = cfg.diversity.elements;
        opt.realizations = cfg.diversity.realizations;
        opt.rx_antennas = cfg.rx_antennas;
        opt.seed = cfg.seed;
        const SweepResult sweep = diversity_sweep(opt);
        io::write_sweep_csv(run.claim("diversity.csv"), sweep);
        json summary = {{"realizations", opt.realizations}};
        summary["log_log_slope"] = sweep.slope ? json(*sweep.slope) : json(nullptr);
        run.json_file("diversity.json", summary);
        return sweep.seeds;
    }

    std::vector<std::uint64_t> run_two_stream(const ScenarioConfig &cfg, Run &run)
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
        opt.seed = cfg.seed;
        const TwoStreamReport rep = two_stream_experiment(cfg, opt);

        Eigen::MatrixXd rows(2, 8);
        const int orders[2] = {opt.order1, opt.order2};
        for (int s = 0; s < 2; ++s)
            rows.row(s) << s + 1, orders[s], 10 * std::log10(rep.sinr_before[s]), 10 * std::log10(rep.sinr_after[s]),
                rep.evm_before_db[s], rep.evm_after_db[s], rep.ber_before[s], rep.ber_after[s];
        io::write_csv(run.claim("two_stream.csv"),
                      {"stream", "qam_order", "sinr_before_db", "sinr_after_db", "evm_before_db", "evm_after_db", "ber_before",
                       "ber_after"},
                      rows);
        run.json_file("ao.json", {{"objective", rep.solution.objective},
                                  {"iterations", rep.solution.iterations},
                                  {"converged", rep.solution.converged},
                                  {"objective_trace", rep.solution.objective_trace},
                                  {"sigma2", rep.sigma2},
                                  {"phases1_rad", angles_of(rep.solution.phases[0])},
                                  {"phases2_rad", angles_of(rep.solution.phases[1])}});
        return {cfg.seed};
    }

    std::vector<std::uint64_t> run_sense(const ScenarioConfig &cfg, Run &run)
    {
        Diagnostics diag;
        const Link link = build_link(cfg, cfg.seed, &diag);
        const MagnitudeCurve curve =
            cfg.diode_curve_csv.empty() ? default_state_curve(cfg.sensing.phase_state) : io::read_curve_csv(cfg.diode_curve_csv);
        SpoofingOptions opt;
        opt.depth = cfg.sensing.depth;
        opt.calibrated = cfg.sensing.calibrated;
        opt.snr_db = cfg.sensing.snr_db;
        opt.seed = cfg.seed;
        const SpoofingResult res = spoofing_chain(link, cfg.sensing.signature, curve, cfg.sensing.probes, opt, &diag);

        const auto &tpl = cfg.sensing.signature;
        io::write_waveform(run.claim("waveform.f64"), res.waveform, tpl.sample_rate_hz);
        run.claim("waveform.f64.json");
        io::write_waveform(run.claim("magnitude.f64"), res.magnitude, tpl.sample_rate_hz);
        run.claim("magnitude.f64.json");
        io::write_spectrogram(run.claim("target.csv"), res.target);
        run.claim("target.csv.json");
        for (size_t p = 0; p < res.recovered.size(); ++p)
        {
            const std::string name = "recovered_" + std::to_string(p) + ".csv";
            io::write_spectrogram(run.claim(name), res.recovered[p]);
            run.claim(name + ".json");
        }
        Eigen::MatrixXd fid(Eigen::Index(res.fidelity.size()), 2);
        for (size_t p = 0; p < res.fidelity.size(); ++p)
            fid.row(Eigen::Index(p)) << double(p), res.fidelity[p];
        io::write_csv(run.claim("fidelity.csv"), {"recovered", "fidelity"}, fid);
        run.json_file("sense.json", {{"cross_fidelity", res.cross_fidelity},
                                     {"min_fidelity", res.fidelity.empty() ? 0.0 : *std::min_element(res.fidelity.begin(), res.fidelity.end())},
                                     {"diagnostics", diagnostics_json(diag)}});
        return {cfg.seed};
    }

    std::vector<std::uint64_t> dispatch(const std::string &sub, const ScenarioConfig &cfg, Run &run)
    {
        if (sub == "simulate")
            return run_simulate(cfg, run);
        if (sub == "precode")
            return run_precode(cfg, run);
        if (sub == "ber-sweep")
            return run_ber(cfg, run);
        if (sub == "diversity-sweep")
            return run_diversity(cfg, run);
        if (sub == "two-stream")
            return run_two_stream(cfg, run);
        if (sub == "sense")
            return run_sense(cfg, run);
        throw Error("unknown subcommand " + sub);
    }

    fs::path output_dir(const Flags &flags)
    {
        if (!flags.out.empty())
            return flags.out;
        if (const char *env = std::getenv("MSA_OUT_DIR"); env != nullptr && *env != '\0')
            return env;
        return "msa_out";
    }

    int execute(const std::string &sub, ScenarioConfig cfg, const fs::path &dir, bool quiet, const io::RunManifest *reference)
    {
        fs::create_directories(dir);
        Run run(dir, quiet);
        io::RunManifest manifest;
        manifest.subcommand = sub;
        manifest.started_utc = io::utc_timestamp();
        try
        {
            cfg.validate();
            manifest.config = emit_config(cfg);
            manifest.config_hash = config_hash(cfg);
            run.log(sub + ": config " + manifest.config_hash + " -> " + dir.string());
            manifest.seeds = dispatch(sub, cfg, run);
            manifest.outputs = run.validate();
            manifest.versions = {{"msa", "0.1.0"},
                                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                               std::to_string(EIGEN_MINOR_VERSION)},
                                 {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
            manifest.finished_utc = io::utc_timestamp();
            io::write_manifest(dir / "manifest.json", manifest);
        }
        catch (const std::exception &e)
        {
            run.remove_all();
            std::cerr << "msa " << sub << ": " << e.what() << "\n";
            return dynamic_cast<const ConfigError *>(&e) ? 2 : 1;
        }

        if (reference == nullptr)
            return 0;
        int mismatches = 0;
        for (const auto &expected : reference->outputs)
        {
            const auto it = std::find_if(manifest.outputs.begin(), manifest.outputs.end(),
                                         [&](const io::OutputRecord &r) { return r.file == expected.file; });
            if (it == manifest.outputs.end() || !(*it == expected))
            {
                ++mismatches;
                std::cerr << "rerun: " << expected.file << " differs from the manifest\n";
            }
        }
        if (mismatches == 0)
            run.log("rerun: " + std::to_string(reference->outputs.size()) + " files byte-identical");
        return mismatches == 0 ? 0 : 3;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"msa: programmable metasurface transmitter simulator"};
    app.require_subcommand(1);
    Flags flags;

    const std::vector<std::pair<std::string, std::string>> experiments{
        {"simulate", "build the link and write channels and received samples"},
        {"precode", "closed-form phase precoding for the configured link"},
        {"ber-sweep", "BER versus SNR Monte Carlo sweep"},
        {"diversity-sweep", "optimized received power versus element count"},
        {"two-stream", "two-stream interference cancellation by alternating optimization"},
        {"sense", "micro-Doppler spoofing chain"},
    };
    for (const auto &[name, help] : experiments)
    {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "scenario JSON (defaults when omitted)")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory (default $MSA_OUT_DIR, then ./msa_out)");
        sub->add_option("--seed", flags.seed, "master seed, overrides the config");
        sub->add_option("--trials", flags.trials, "trials / realizations per sweep point, overrides the config")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", flags.quiet, "no progress output");
    }
    auto *rerun = app.add_subcommand("rerun", "repeat a run from its manifest and compare outputs byte for byte");
    rerun->add_option("--manifest", flags.manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    rerun->add_option("--out", flags.out, "output directory for the repeat (default <run>/rerun)");
    rerun->add_flag("--quiet", flags.quiet, "no progress output");

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try
    {
        if (sub == "rerun")
        {
            const io::RunManifest reference = io::read_manifest(flags.manifest);
            const ScenarioConfig cfg = parse_config_text(reference.config);
            if (config_hash(cfg) != reference.config_hash)
                throw ConfigError("config_hash", "manifest config does not match its recorded hash");
            const fs::path dir = flags.out.empty() ? fs::path(flags.manifest).parent_path() / "rerun" : fs::path(flags.out);
            return execute(reference.subcommand, cfg, dir, flags.quiet, &reference);
        }

        ScenarioConfig cfg = flags.config.empty() ? ScenarioConfig{} : parse_config(flags.config);
        if (flags.seed)
            cfg.seed = *flags.seed;
        if (flags.trials)
        {
            cfg.ber.trials = *flags.trials;
            cfg.diversity.realizations = *flags.trials;
        }
        return execute(sub, cfg, output_dir(flags), flags.quiet, nullptr);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "msa " << sub << ": config error at " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "msa " << sub << ": " << e.what() << "\n";
        return 1;
    }
}

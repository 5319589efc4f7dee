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

// Data files. Numbers are written with 17 significant digits so files round-trip exactly and two runs
// with the same inputs produce the same bytes. Waveforms and spectrograms carry a JSON sidecar next
// to the data file (`<file>.json`).

#pragma once

#include "msa/mixer.hpp"
#include "msa/modem.hpp"
#include "msa/sensing.hpp"
#include "msa/simulator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace msa::io
{
    namespace fs = std::filesystem;

    std::string format_number(double value);
    fs::path sidecar_path(const fs::path &data);

    void write_text(const fs::path &path, const std::string &text);
    std::string read_text(const fs::path &path);

    // Comma-separated, one header line
    void write_csv(const fs::path &path, const std::vector<std::string> &header, const Eigen::MatrixXd &rows);
    // A first line that does not parse as numbers is taken as the header
    Eigen::MatrixXd read_csv(const fs::path &path, std::vector<std::string> *header = nullptr);

    // Complex matrices as re_j,im_j column pairs
    void write_complex_csv(const fs::path &path, const Eigen::MatrixXcd &m);
    Eigen::MatrixXcd read_complex_csv(const fs::path &path);

    // `.csv` gives a single-column CSV, anything else raw little-endian float64; both with a sidecar
    void write_waveform(const fs::path &path, const Eigen::VectorXd &samples, double sample_rate_hz, double origin_s = 0.0);
    IFWaveform read_waveform(const fs::path &path);

    // Two columns: volts, magnitude
    MagnitudeCurve read_curve_csv(const fs::path &path);

    // Surface magnitude time series, returned elements x samples. CSV has one column per element;
    // raw float64 files are row-major samples x elements with "columns" in the sidecar.
    Eigen::MatrixXd read_magnitudes(const fs::path &path);

    // frames x bins CSV grid with a sidecar holding rates, window and hop
    void write_spectrogram(const fs::path &path, const Spectrogram &spec);
    Spectrogram read_spectrogram(const fs::path &path);

    // Columns: <axis_name>, <metric_name>, ci_low, ci_high, trials, events, samples, flagged
    void write_sweep_csv(const fs::path &path, const SweepResult &sweep);

    struct OutputRecord
    {
        std::string file; // relative to the output directory
        std::uintmax_t bytes = 0;
        std::string fnv1a;
        bool operator==(const OutputRecord &) const = default;
    };

    struct RunManifest
    {
        std::string subcommand;
        std::string config_hash;
        std::string config; // effective config, as emitted
        std::vector<std::uint64_t> seeds;
        std::vector<std::pair<std::string, std::string>> versions;
        std::string started_utc;
        std::string finished_utc;
        std::vector<OutputRecord> outputs;
    };

    OutputRecord describe_output(const fs::path &dir, const std::string &file);
    void write_manifest(const fs::path &path, const RunManifest &manifest);
    RunManifest read_manifest(const fs::path &path);
    std::string utc_timestamp();
} // namespace msa::io

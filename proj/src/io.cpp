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

#include "msa/io.hpp"
#include "msa/config.hpp"
#include "msa/errors.hpp"

#include <json.hpp>

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace msa::io
{
    namespace
    {
        using json = nlohmann::ordered_json;

        static_assert(std::endian::native == std::endian::little, "raw float64 files assume a little-endian host");

        std::vector<std::string> split(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cell;
            std::istringstream in(line);
            while (std::getline(in, cell, ','))
            {
                while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
                    cell.pop_back();
                size_t start = 0;
                while (start < cell.size() && cell[start] == ' ')
                    ++start;
                out.push_back(cell.substr(start));
            }
            return out;
        }

        bool parse_number(const std::string &s, double &out)
        {
            if (s.empty())
                return false;
            char *end = nullptr;
            out = std::strtod(s.c_str(), &end);
            return end == s.c_str() + s.size();
        }

        json read_sidecar(const fs::path &data)
        {
            const fs::path side = sidecar_path(data);
            try
            {
                return json::parse(read_text(side));
            }
            catch (const json::exception &e)
            {
                throw IoError(side.string() + ": " + e.what());
            }
        }

        std::string window_name(dsp::Window w)
        {
            switch (w)
            {
            case dsp::Window::Hann:
                return "hann";
            case dsp::Window::SqrtHann:
                return "sqrt_hann";
            case dsp::Window::Rectangular:
                return "rectangular";
            case dsp::Window::BlackmanHarris:
                return "blackman_harris";
            }
            return "?";
        }

        dsp::Window window_from(const std::string &name)
        {
            for (auto w : {dsp::Window::Hann, dsp::Window::SqrtHann, dsp::Window::Rectangular, dsp::Window::BlackmanHarris})
                if (window_name(w) == name)
                    return w;
            throw IoError("unknown window '" + name + "'");
        }

        std::vector<double> read_raw_f64(const fs::path &path)
        {
            const std::string bytes = read_text(path);
            if (bytes.size() % sizeof(double) != 0)
                throw IoError(path.string() + ": size is not a multiple of 8 bytes");
            std::vector<double> v(bytes.size() / sizeof(double));
            std::memcpy(v.data(), bytes.data(), bytes.size());
            return v;
        }
    } // namespace

    std::string format_number(double value)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        return buf;
    }

    fs::path sidecar_path(const fs::path &data)
    {
        return fs::path(data.string() + ".json");
    }

    void write_text(const fs::path &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << text;
        if (!out.flush())
            throw IoError("write failed: " + path.string());
    }

    std::string read_text(const fs::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }

    void write_csv(const fs::path &path, const std::vector<std::string> &header, const Eigen::MatrixXd &rows)
    {
        require_dims(header.empty() || Eigen::Index(header.size()) == rows.cols(), "csv header does not match the column count");
        std::string text;
        for (size_t c = 0; c < header.size(); ++c)
            text += (c ? "," : "") + header[c];
        if (!header.empty())
            text += "\n";
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
        {
            for (Eigen::Index c = 0; c < rows.cols(); ++c)
                text += (c ? "," : "") + format_number(rows(r, c));
            text += "\n";
        }
        write_text(path, text);
    }

    Eigen::MatrixXd read_csv(const fs::path &path, std::vector<std::string> *header)
    {
        std::istringstream in(read_text(path));
        std::string line;
        std::vector<std::vector<double>> rows;
        bool first = true;
        size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            const auto cells = split(line);
            std::vector<double> values(cells.size());
            bool numeric = true;
            for (size_t i = 0; i < cells.size(); ++i)
                numeric = numeric && parse_number(cells[i], values[i]);
            if (!numeric)
            {
                if (!first)
                    throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
                if (header)
                    *header = cells;
                first = false;
                continue;
            }
            first = false;
            if (!rows.empty() && values.size() != rows.front().size())
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(rows.front().size()) + " columns, got " + std::to_string(values.size()));
            rows.push_back(std::move(values));
        }
        Eigen::MatrixXd out(Eigen::Index(rows.size()), rows.empty() ? 0 : Eigen::Index(rows.front().size()));
        for (size_t r = 0; r < rows.size(); ++r)
            for (size_t c = 0; c < rows[r].size(); ++c)
                out(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
        return out;
    }

    void write_complex_csv(const fs::path &path, const Eigen::MatrixXcd &m)
    {
        std::vector<std::string> header;
        Eigen::MatrixXd flat(m.rows(), 2 * m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c)
        {
            header.push_back("re_" + std::to_string(c));
            header.push_back("im_" + std::to_string(c));
            flat.col(2 * c) = m.col(c).real();
            flat.col(2 * c + 1) = m.col(c).imag();
        }
        write_csv(path, header, flat);
    }

    Eigen::MatrixXcd read_complex_csv(const fs::path &path)
    {
        const Eigen::MatrixXd flat = read_csv(path);
        if (flat.cols() % 2 != 0)
            throw IoError(path.string() + ": complex CSV needs an even number of columns");
        Eigen::MatrixXcd m(flat.rows(), flat.cols() / 2);
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                m(r, c) = {flat(r, 2 * c), flat(r, 2 * c + 1)};
        return m;
    }

    void write_waveform(const fs::path &path, const Eigen::VectorXd &samples, double sample_rate_hz, double origin_s)
    {
        const bool csv = path.extension() == ".csv";
        if (csv)
            write_csv(path, {"sample"}, samples);
        else
        {
            std::string bytes(size_t(samples.size()) * sizeof(double), '\0');
            std::memcpy(bytes.data(), samples.data(), bytes.size());
            write_text(path, bytes);
        }
        json side = {{"format", csv ? "csv" : "f64le"},
                     {"samples", samples.size()},
                     {"columns", 1},
                     {"sample_rate_hz", sample_rate_hz},
                     {"origin_s", origin_s}};
        write_text(sidecar_path(path), side.dump(2) + "\n");
    }

    IFWaveform read_waveform(const fs::path &path)
    {
        const json side = read_sidecar(path);
        IFWaveform w;
        try
        {
            w.sample_rate_hz = side.at("sample_rate_hz").get<double>();
            w.origin_s = side.value("origin_s", 0.0);
        }
        catch (const json::exception &e)
        {
            throw IoError(sidecar_path(path).string() + ": " + e.what());
        }
        if (path.extension() == ".csv")
        {
            const Eigen::MatrixXd m = read_csv(path);
            if (m.cols() != 1)
                throw IoError(path.string() + ": waveform CSV must have one column");
            w.samples = m.col(0);
        }
        else
        {
            const auto v = read_raw_f64(path);
            w.samples = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
        }
        return w;
    }

    MagnitudeCurve read_curve_csv(const fs::path &path)
    {
        const Eigen::MatrixXd m = read_csv(path);
        if (m.cols() != 2)
            throw IoError(path.string() + ": curve CSV needs two columns (volts, magnitude)");
        std::vector<double> v(size_t(m.rows())), a(size_t(m.rows()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
        {
            v[size_t(r)] = m(r, 0);
            a[size_t(r)] = m(r, 1);
        }
        return MagnitudeCurve(std::move(v), std::move(a));
    }

    Eigen::MatrixXd read_magnitudes(const fs::path &path)
    {
        if (path.extension() == ".csv")
            return read_csv(path).transpose();
        const json side = read_sidecar(path);
        const auto columns = side.value("columns", std::int64_t(1));
        const auto v = read_raw_f64(path);
        if (columns < 1 || v.size() % size_t(columns) != 0)
            throw IoError(path.string() + ": sample count is not a multiple of the column count");
        const Eigen::Index T = Eigen::Index(v.size()) / columns;
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), T, columns)
            .transpose();
    }

    void write_spectrogram(const fs::path &path, const Spectrogram &spec)
    {
        std::vector<std::string> header;
        for (Eigen::Index k = 0; k < spec.bins(); ++k)
            header.push_back("bin_" + std::to_string(k));
        write_csv(path, header, spec.magnitude);
        json side = {{"frames", spec.frames()},
                     {"bins", spec.bins()},
                     {"sample_rate_hz", spec.sample_rate_hz},
                     {"window", window_name(spec.window)},
                     {"window_length", spec.window_length},
                     {"hop", spec.hop},
                     {"signal_length", spec.signal_length},
                     {"bin_hz", spec.window_length > 0 ? spec.bin_hz(1) : 0.0}};
        write_text(sidecar_path(path), side.dump(2) + "\n");
    }

    Spectrogram read_spectrogram(const fs::path &path)
    {
        const json side = read_sidecar(path);
        Spectrogram s;
        s.magnitude = read_csv(path);
        try
        {
            s.sample_rate_hz = side.at("sample_rate_hz").get<double>();
            s.window = window_from(side.at("window").get<std::string>());
            s.window_length = side.at("window_length").get<Eigen::Index>();
            s.hop = side.at("hop").get<Eigen::Index>();
            s.signal_length = side.at("signal_length").get<Eigen::Index>();
        }
        catch (const json::exception &e)
        {
            throw IoError(sidecar_path(path).string() + ": " + e.what());
        }
        s.validate();
        return s;
    }

    void write_sweep_csv(const fs::path &path, const SweepResult &sweep)
    {
        std::string text = sweep.axis_name + "," + sweep.metric_name + ",ci_low,ci_high,trials,events,samples,flagged\n";
        for (const auto &p : sweep.points)
            text += format_number(p.axis) + "," + format_number(p.metric) + "," + format_number(p.ci_low) + "," +
                    format_number(p.ci_high) + "," + std::to_string(p.trials) + "," + std::to_string(p.events) + "," +
                    std::to_string(p.samples) + "," + (p.flagged ? "1" : "0") + "\n";
        write_text(path, text);
    }

    OutputRecord describe_output(const fs::path &dir, const std::string &file)
    {
        OutputRecord r;
        r.file = file;
        const std::string bytes = read_text(dir / file);
        r.bytes = bytes.size();
        r.fnv1a = hex64(fnv1a64(bytes));
        return r;
    }

    void write_manifest(const fs::path &path, const RunManifest &m)
    {
        json versions = json::object();
        for (const auto &[k, v] : m.versions)
            versions[k] = v;
        json outputs = json::array();
        for (const auto &o : m.outputs)
            outputs.push_back({{"file", o.file}, {"bytes", o.bytes}, {"fnv1a", o.fnv1a}});
        json root = {{"subcommand", m.subcommand},
                     {"config_hash", m.config_hash},
                     {"seeds", m.seeds},
                     {"versions", versions},
                     {"started_utc", m.started_utc},
                     {"finished_utc", m.finished_utc},
                     {"outputs", outputs},
                     {"config", json::parse(m.config)}};
        write_text(path, root.dump(2) + "\n");
    }

    RunManifest read_manifest(const fs::path &path)
    {
        RunManifest m;
        try
        {
            const json root = json::parse(read_text(path));
            m.subcommand = root.at("subcommand").get<std::string>();
            m.config_hash = root.at("config_hash").get<std::string>();
            m.seeds = root.at("seeds").get<std::vector<std::uint64_t>>();
            for (const auto &item : root.at("versions").items())
                m.versions.emplace_back(item.key(), item.value().get<std::string>());
            m.started_utc = root.value("started_utc", "");
            m.finished_utc = root.value("finished_utc", "");
            for (const auto &o : root.at("outputs"))
                m.outputs.push_back({o.at("file").get<std::string>(), o.at("bytes").get<std::uintmax_t>(),
                                     o.at("fnv1a").get<std::string>()});
            m.config = root.at("config").dump(2) + "\n";
        }
        catch (const json::exception &e)
        {
            throw IoError(path.string() + ": " + e.what());
        }
        return m;
    }

    std::string utc_timestamp()
    {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }
} // namespace msa::io

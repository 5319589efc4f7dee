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

#include "msa/config.hpp"
#include "msa/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace msa
{
    namespace
    {
        using json = nlohmann::ordered_json;

        std::string join(const std::string &path, const std::string &key)
        {
            return path.empty() ? key : path + "." + key;
        }

        double as_double(const json &v, const std::string &path)
        {
            if (!v.is_number())
                throw ConfigError(path, "expected a number");
            return v.get<double>();
        }

        long long as_integer(const json &v, const std::string &path)
        {
            if (!v.is_number_integer())
                throw ConfigError(path, "expected an integer");
            return v.get<long long>();
        }

        std::complex<double> as_complex(const json &v, const std::string &path)
        {
            if (!v.is_array() || v.size() != 2)
                throw ConfigError(path, "expected [re, im]");
            return {as_double(v[0], path + "[0]"), as_double(v[1], path + "[1]")};
        }

        json from_complex(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

        // Keyed access that remembers which keys were consumed
        class Section
        {
        public:
            Section(const json &j, std::string path) : j_(j), path_(std::move(path))
            {
                if (!j_.is_object())
                    throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
            }

            bool has(const std::string &key) const { return j_.contains(key); }

            const json &at(const std::string &key)
            {
                seen_.insert(key);
                return j_.at(key);
            }

            std::string path(const std::string &key) const { return join(path_, key); }

            void get(const std::string &key, double &out)
            {
                if (has(key))
                    out = as_double(at(key), path(key));
            }

            void get(const std::string &key, int &out)
            {
                if (!has(key))
                    return;
                const long long v = as_integer(at(key), path(key));
                if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
                    throw ConfigError(path(key), "integer out of range");
                out = int(v);
            }

            void get(const std::string &key, std::uint64_t &out)
            {
                if (!has(key))
                    return;
                const json &v = at(key);
                if (!v.is_number_unsigned())
                    throw ConfigError(path(key), "expected a non-negative integer");
                out = v.get<std::uint64_t>();
            }

            void get(const std::string &key, bool &out)
            {
                if (!has(key))
                    return;
                const json &v = at(key);
                if (!v.is_boolean())
                    throw ConfigError(path(key), "expected true or false");
                out = v.get<bool>();
            }

            void get(const std::string &key, std::string &out)
            {
                if (!has(key))
                    return;
                const json &v = at(key);
                if (!v.is_string())
                    throw ConfigError(path(key), "expected a string");
                out = v.get<std::string>();
            }

            void get(const std::string &key, std::complex<double> &out)
            {
                if (has(key))
                    out = as_complex(at(key), path(key));
            }

            template <typename T>
            void get_list(const std::string &key, std::vector<T> &out)
            {
                if (!has(key))
                    return;
                const json &v = at(key);
                if (!v.is_array())
                    throw ConfigError(path(key), "expected an array");
                out.clear();
                for (size_t i = 0; i < v.size(); ++i)
                {
                    const std::string p = path(key) + "[" + std::to_string(i) + "]";
                    if constexpr (std::is_same_v<T, double>)
                        out.push_back(as_double(v[i], p));
                    else if constexpr (std::is_same_v<T, int>)
                        out.push_back(int(as_integer(v[i], p)));
                    else
                        out.push_back(as_complex(v[i], p));
                }
            }

            template <typename Enum>
            void get_enum(const std::string &key, Enum &out, std::initializer_list<std::pair<const char *, Enum>> names)
            {
                if (!has(key))
                    return;
                std::string name;
                get(key, name);
                std::string allowed;
                for (const auto &[n, e] : names)
                {
                    if (name == n)
                    {
                        out = e;
                        return;
                    }
                    allowed += (allowed.empty() ? "" : ", ") + std::string(n);
                }
                throw ConfigError(path(key), "unknown value '" + name + "' (expected one of " + allowed + ")");
            }

            void finish() const
            {
                for (const auto &item : j_.items())
                    if (!seen_.count(item.key()))
                        throw ConfigError(join(path_, item.key()), "unknown key");
            }

        private:
            const json &j_;
            std::string path_;
            std::set<std::string> seen_;
        };

        constexpr std::initializer_list<std::pair<const char *, ChannelModel>> channel_names{
            {"paths", ChannelModel::Paths}, {"rayleigh", ChannelModel::Rayleigh}, {"bypass", ChannelModel::Bypass}};
        constexpr std::initializer_list<std::pair<const char *, Precoding>> precoding_names{
            {"none", Precoding::None}, {"closed_form", Precoding::ClosedForm}};
        constexpr std::initializer_list<std::pair<const char *, SubsurfaceSplit>> split_names{
            {"index", SubsurfaceSplit::Index}, {"columns", SubsurfaceSplit::Columns}};
        constexpr std::initializer_list<std::pair<const char *, PulseShape::Kind>> pulse_names{
            {"raised_cosine", PulseShape::Kind::RaisedCosine}, {"rectangular", PulseShape::Kind::Rectangular}};

        template <typename Enum>
        std::string enum_name(Enum value, std::initializer_list<std::pair<const char *, Enum>> names)
        {
            for (const auto &[n, e] : names)
                if (e == value)
                    return n;
            return "?";
        }

        std::vector<PathComponent<double>> read_paths(Section &parent, const std::string &key)
        {
            const json &list = parent.at(key);
            if (!list.is_array())
                throw ConfigError(parent.path(key), "expected an array of paths");
            std::vector<PathComponent<double>> out;
            for (size_t i = 0; i < list.size(); ++i)
            {
                Section s(list[i], parent.path(key) + "[" + std::to_string(i) + "]");
                PathComponent<double> p;
                s.get("gain", p.gain);
                s.get("delay_s", p.delay_s);
                s.get("surface_theta_rad", p.at_surface.theta);
                s.get("surface_phi_rad", p.at_surface.phi);
                s.get("terminal_theta_rad", p.at_terminal.theta);
                s.get("terminal_phi_rad", p.at_terminal.phi);
                s.finish();
                out.push_back(p);
            }
            return out;
        }

        json write_paths(const std::vector<PathComponent<double>> &paths)
        {
            json list = json::array();
            for (const auto &p : paths)
                list.push_back({{"gain", from_complex(p.gain)},
                                {"delay_s", p.delay_s},
                                {"surface_theta_rad", p.at_surface.theta},
                                {"surface_phi_rad", p.at_surface.phi},
                                {"terminal_theta_rad", p.at_terminal.theta},
                                {"terminal_phi_rad", p.at_terminal.phi}});
            return list;
        }

        ScenarioConfig from_json(const json &root)
        {
            ScenarioConfig cfg;
            Section top(root, "");
            top.get("carrier_hz", cfg.carrier_hz);
            top.get("seed", cfg.seed);
            top.get("noise_sigma2", cfg.noise_sigma2);
            top.get("carrier_envelope", cfg.carrier_envelope);

            if (!top.has("surface"))
                throw ConfigError("surface", "missing required section");
            {
                Section s(top.at("surface"), "surface");
                if (!s.has("rows"))
                    throw ConfigError("surface.rows", "missing required field");
                if (!s.has("cols"))
                    throw ConfigError("surface.cols", "missing required field");
                s.get("rows", cfg.rows);
                s.get("cols", cfg.cols);
                // spacing defaults to half a wavelength at the configured carrier
                cfg.spacing_m = 0.5 * cfg.wavelength_m();
                s.get("spacing_m", cfg.spacing_m);
                s.get("grid_theta", cfg.grid_theta);
                s.get("grid_phi", cfg.grid_phi);
                s.get("pattern_exponent", cfg.pattern_exponent);
                if (s.has("phase_palette_rad"))
                {
                    cfg.phase_palette.emplace();
                    s.get_list("phase_palette_rad", *cfg.phase_palette);
                }
                if (s.has("phases_rad"))
                {
                    cfg.phases_rad.emplace();
                    s.get_list("phases_rad", *cfg.phases_rad);
                }
                s.get("magnitudes_file", cfg.magnitudes_file);
                s.finish();
            }
            if (top.has("terminals"))
            {
                Section s(top.at("terminals"), "terminals");
                s.get("tx_antennas", cfg.tx_antennas);
                s.get("rx_antennas", cfg.rx_antennas);
                s.get("spacing_wavelengths", cfg.terminal_spacing_wavelengths);
                s.get_list("tx_beam", cfg.tx_beam);
                s.finish();
            }
            if (top.has("channel"))
            {
                Section s(top.at("channel"), "channel");
                s.get_enum("model", cfg.channel, channel_names);
                if (s.has("tx_paths"))
                    cfg.tx_paths = read_paths(s, "tx_paths");
                if (s.has("rx_paths"))
                    cfg.rx_paths = read_paths(s, "rx_paths");
                s.finish();
            }
            if (top.has("modem"))
            {
                Section s(top.at("modem"), "modem");
                s.get("f_if_hz", cfg.modem.f_if_hz);
                s.get("sample_rate_hz", cfg.modem.sample_rate_hz);
                s.get("samples_per_symbol", cfg.modem.samples_per_symbol);
                s.get("qam_order", cfg.qam_order);
                s.get("dac_bits", cfg.dac_bits);
                s.get("dac_full_scale", cfg.dac_full_scale);
                if (s.has("pulse"))
                {
                    Section p(s.at("pulse"), "modem.pulse");
                    p.get_enum("shape", cfg.pulse.kind, pulse_names);
                    p.get("rolloff", cfg.pulse.rolloff);
                    p.get("span_symbols", cfg.pulse.span_symbols);
                    p.finish();
                }
                s.finish();
            }
            if (top.has("diode"))
            {
                Section s(top.at("diode"), "diode");
                s.get("saturation_current_a", cfg.diode_saturation_current_a);
                s.get("alpha_per_v", cfg.diode_alpha_per_v);
                s.get("bias_v", cfg.diode_bias_v);
                s.get("curve_csv", cfg.diode_curve_csv);
                s.finish();
            }
            if (top.has("ber_sweep"))
            {
                Section s(top.at("ber_sweep"), "ber_sweep");
                s.get_list("snr_db", cfg.ber.snr_db);
                s.get("trials", cfg.ber.trials);
                s.get("bits_per_point", cfg.ber.bits_per_point);
                s.get_enum("precoding", cfg.ber.precoding, precoding_names);
                s.finish();
            }
            if (top.has("diversity_sweep"))
            {
                Section s(top.at("diversity_sweep"), "diversity_sweep");
                s.get_list("elements", cfg.diversity.elements);
                s.get("realizations", cfg.diversity.realizations);
                s.finish();
            }
            if (top.has("two_stream"))
            {
                Section s(top.at("two_stream"), "two_stream");
                s.get("order1", cfg.two_stream.order1);
                s.get("order2", cfg.two_stream.order2);
                s.get("snr_db", cfg.two_stream.snr_db);
                s.get("symbols", cfg.two_stream.symbols);
                s.get_enum("split", cfg.two_stream.split, split_names);
                s.get("shared_h_eff", cfg.two_stream.shared_h_eff);
                s.get("restarts", cfg.two_stream.restarts);
                s.get("tol", cfg.two_stream.tol);
                s.get("max_iter", cfg.two_stream.max_iter);
                s.finish();
            }
            if (top.has("sensing"))
            {
                Section s(top.at("sensing"), "sensing");
                auto &sig = cfg.sensing.signature;
                if (s.has("rotors"))
                {
                    const json &list = s.at("rotors");
                    if (!list.is_array())
                        throw ConfigError("sensing.rotors", "expected an array");
                    sig.rotors.clear();
                    for (size_t i = 0; i < list.size(); ++i)
                    {
                        Section r(list[i], "sensing.rotors[" + std::to_string(i) + "]");
                        RotorSpec rotor;
                        r.get("rate_hz", rotor.rate_hz);
                        r.get("blades", rotor.blades);
                        r.get("max_doppler_hz", rotor.max_doppler_hz);
                        r.get("phase_rad", rotor.phase_rad);
                        r.finish();
                        sig.rotors.push_back(rotor);
                    }
                }
                s.get("duration_s", sig.duration_s);
                s.get("sample_rate_hz", sig.sample_rate_hz);
                s.get("centre_hz", sig.centre_hz);
                int wl = int(sig.window_length), hop = int(sig.hop);
                s.get("window_length", wl);
                s.get("hop", hop);
                sig.window_length = wl;
                sig.hop = hop;
                if (s.has("probes"))
                {
                    const json &list = s.at("probes");
                    if (!list.is_array())
                        throw ConfigError("sensing.probes", "expected an array");
                    cfg.sensing.probes.clear();
                    for (size_t i = 0; i < list.size(); ++i)
                    {
                        Section p(list[i], "sensing.probes[" + std::to_string(i) + "]");
                        Direction<double> d;
                        p.get("theta_rad", d.theta);
                        p.get("phi_rad", d.phi);
                        p.finish();
                        cfg.sensing.probes.push_back(d);
                    }
                }
                s.get("phase_state", cfg.sensing.phase_state);
                s.get("depth", cfg.sensing.depth);
                s.get("calibrated", cfg.sensing.calibrated);
                // null means noiseless
                if (s.has("snr_db") && s.at("snr_db").is_null())
                    cfg.sensing.snr_db = std::numeric_limits<double>::infinity();
                else
                    s.get("snr_db", cfg.sensing.snr_db);
                s.finish();
            }
            top.finish();
            cfg.validate();
            return cfg;
        }

        json to_json(const ScenarioConfig &cfg)
        {
            json root;
            root["carrier_hz"] = cfg.carrier_hz;
            root["seed"] = cfg.seed;
            root["noise_sigma2"] = cfg.noise_sigma2;
            root["carrier_envelope"] = from_complex(cfg.carrier_envelope);

            json surface;
            surface["rows"] = cfg.rows;
            surface["cols"] = cfg.cols;
            surface["spacing_m"] = cfg.spacing_m;
            surface["grid_theta"] = cfg.grid_theta;
            surface["grid_phi"] = cfg.grid_phi;
            surface["pattern_exponent"] = cfg.pattern_exponent;
            if (cfg.phase_palette)
                surface["phase_palette_rad"] = *cfg.phase_palette;
            if (cfg.phases_rad)
                surface["phases_rad"] = *cfg.phases_rad;
            surface["magnitudes_file"] = cfg.magnitudes_file;
            root["surface"] = surface;

            json beam = json::array();
            for (const auto &z : cfg.tx_beam)
                beam.push_back(from_complex(z));
            root["terminals"] = {{"tx_antennas", cfg.tx_antennas},
                                 {"rx_antennas", cfg.rx_antennas},
                                 {"spacing_wavelengths", cfg.terminal_spacing_wavelengths},
                                 {"tx_beam", beam}};
            root["channel"] = {{"model", enum_name(cfg.channel, channel_names)},
                               {"tx_paths", write_paths(cfg.tx_paths)},
                               {"rx_paths", write_paths(cfg.rx_paths)}};
            root["modem"] = {{"f_if_hz", cfg.modem.f_if_hz},
                             {"sample_rate_hz", cfg.modem.sample_rate_hz},
                             {"samples_per_symbol", cfg.modem.samples_per_symbol},
                             {"qam_order", cfg.qam_order},
                             {"dac_bits", cfg.dac_bits},
                             {"dac_full_scale", cfg.dac_full_scale},
                             {"pulse",
                              {{"shape", enum_name(cfg.pulse.kind, pulse_names)},
                               {"rolloff", cfg.pulse.rolloff},
                               {"span_symbols", cfg.pulse.span_symbols}}}};
            root["diode"] = {{"saturation_current_a", cfg.diode_saturation_current_a},
                             {"alpha_per_v", cfg.diode_alpha_per_v},
                             {"bias_v", cfg.diode_bias_v},
                             {"curve_csv", cfg.diode_curve_csv}};
            root["ber_sweep"] = {{"snr_db", cfg.ber.snr_db},
                                 {"trials", cfg.ber.trials},
                                 {"bits_per_point", cfg.ber.bits_per_point},
                                 {"precoding", enum_name(cfg.ber.precoding, precoding_names)}};
            root["diversity_sweep"] = {{"elements", cfg.diversity.elements}, {"realizations", cfg.diversity.realizations}};
            root["two_stream"] = {{"order1", cfg.two_stream.order1},
                                  {"order2", cfg.two_stream.order2},
                                  {"snr_db", cfg.two_stream.snr_db},
                                  {"symbols", cfg.two_stream.symbols},
                                  {"split", enum_name(cfg.two_stream.split, split_names)},
                                  {"shared_h_eff", cfg.two_stream.shared_h_eff},
                                  {"restarts", cfg.two_stream.restarts},
                                  {"tol", cfg.two_stream.tol},
                                  {"max_iter", cfg.two_stream.max_iter}};

            const auto &sig = cfg.sensing.signature;
            json rotors = json::array();
            for (const auto &r : sig.rotors)
                rotors.push_back({{"rate_hz", r.rate_hz},
                                  {"blades", r.blades},
                                  {"max_doppler_hz", r.max_doppler_hz},
                                  {"phase_rad", r.phase_rad}});
            json probes = json::array();
            for (const auto &d : cfg.sensing.probes)
                probes.push_back({{"theta_rad", d.theta}, {"phi_rad", d.phi}});
            json sensing = {{"rotors", rotors},
                            {"duration_s", sig.duration_s},
                            {"sample_rate_hz", sig.sample_rate_hz},
                            {"centre_hz", sig.centre_hz},
                            {"window_length", sig.window_length},
                            {"hop", sig.hop},
                            {"probes", probes},
                            {"phase_state", cfg.sensing.phase_state},
                            {"depth", cfg.sensing.depth},
                            {"calibrated", cfg.sensing.calibrated}};
            if (std::isfinite(cfg.sensing.snr_db))
                sensing["snr_db"] = cfg.sensing.snr_db;
            else
                sensing["snr_db"] = nullptr;
            root["sensing"] = sensing;
            return root;
        }
    } // namespace

    ScenarioConfig parse_config_text(std::string_view text)
    {
        json root;
        try
        {
            root = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
        }
        return from_json(root);
    }

    ScenarioConfig parse_config(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("<file>", "cannot open " + path.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return parse_config_text(buffer.str());
    }

    std::string emit_config(const ScenarioConfig &cfg)
    {
        return to_json(cfg).dump(2) + "\n";
    }

    std::uint64_t fnv1a64(std::string_view bytes)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : bytes)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::string hex64(std::uint64_t value)
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
        return buf;
    }

    std::string config_hash(const ScenarioConfig &cfg)
    {
        return hex64(fnv1a64(emit_config(cfg)));
    }
} // namespace msa

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

// Scenario files. JSON, SI units with the unit in the key name, angles in radians.
// Only surface.rows and surface.cols are required; unknown keys are rejected with their path.
// The schema is documented in README.md.

#pragma once

#include "msa/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace msa
{
    ScenarioConfig parse_config(const std::filesystem::path &path);
    ScenarioConfig parse_config_text(std::string_view text);

    // Canonical effective config: every key, fixed order, re-parses to an equal ScenarioConfig
    std::string emit_config(const ScenarioConfig &cfg);

    std::uint64_t fnv1a64(std::string_view bytes);
    std::string hex64(std::uint64_t value);

    // fnv1a64 of emit_config, in hex
    std::string config_hash(const ScenarioConfig &cfg);
} // namespace msa

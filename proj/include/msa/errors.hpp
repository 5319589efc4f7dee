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

#pragma once

#include <stdexcept>
#include <string>

namespace msa
{
    struct Error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Matrix/vector shapes that do not agree
    struct DimensionError : Error
    {
        using Error::Error;
    };

    // Argument outside the mathematical domain of an operation (angles, voltages, rates)
    struct DomainError : Error
    {
        using Error::Error;
    };

    // Programmable-surface state that violates its invariants (magnitudes outside [0,1], palette)
    struct StateError : Error
    {
        using Error::Error;
    };

    struct CalibrationError : Error
    {
        using Error::Error;
    };

    struct RetractionError : Error
    {
        using Error::Error;
    };

    // Exhaustive searches refuse to run past their evaluation budget
    struct BudgetError : Error
    {
        using Error::Error;
    };

    // All-zero channels and other inputs with no meaningful answer
    struct DegenerateError : Error
    {
        using Error::Error;
    };

    // Unreadable or malformed data files
    struct IoError : Error
    {
        using Error::Error;
    };

    // Configuration problems carry the JSON path of the offending field
    struct ConfigError : Error
    {
        ConfigError(std::string field, const std::string &what)
            : Error(field + ": " + what), field_(std::move(field)) {}

        const std::string &field() const noexcept { return field_; }

    private:
        std::string field_;
    };

    inline void require_dims(bool ok, const std::string &what)
    {
        if (!ok)
            throw DimensionError(what);
    }
} // namespace msa

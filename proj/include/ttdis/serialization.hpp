// Copyright 2026 The ttdis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TTDIS_SERIALIZATION_HPP
#define TTDIS_SERIALIZATION_HPP

#include <iosfwd>
#include <string>

#include "ttdis/dirt.hpp"
#include "ttdis/ftt.hpp"
#include "ttdis/sirt.hpp"

/**
 * \file
 * \brief Little-endian binary containers.
 *
 * FTT1: magic, u64 d, u64 ranks[d + 1], then per dimension u64 n and f64
 * nodes[n], then every core as f64 in row-major order.
 *
 * SIR1: magic, an FTT1 block, f64 tau, per dimension (u8 kind, f64 lower,
 * f64 upper), the d + 1 factors as (u64 rows, u64 cols, f64 data row-major),
 * f64 zeta.
 *
 * DIR1: magic, u64 layer count, u64 reference dimension and the reference
 * entries as in SIR1, the SIR1 blocks, then u64 length and a JSON document
 * with the layer build records and caller metadata.
 */

namespace ttdis {

void write_ftt(std::ostream& out, const FunctionalTT& tt);
FunctionalTT read_ftt(std::istream& in);

void write_sirt(std::ostream& out, const SIRT& sirt);
SIRT read_sirt(std::istream& in);

/// `metadata` is an optional JSON object stored next to the layer records.
void write_dirt(std::ostream& out, const DIRT& dirt, const std::string& metadata = "{}");
DIRT read_dirt(std::istream& in, std::string* metadata = nullptr);

void save_dirt(const std::string& path, const DIRT& dirt, const std::string& metadata = "{}");
DIRT load_dirt(const std::string& path, std::string* metadata = nullptr);

}  // namespace ttdis

#endif  // TTDIS_SERIALIZATION_HPP

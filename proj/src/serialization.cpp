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

#include "ttdis/serialization.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "ttdis/error.hpp"

namespace ttdis {

namespace {

constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

template <class T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  put_u64(out, bits);
}

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("truncated container");
  return to_little(v);
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw ConfigError("truncated container");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t get_count(std::istream& in) {
  const auto v = get_u64(in);
  if (v > kMaxCount) throw ConfigError("container count is implausibly large");
  return v;
}

void expect_magic(std::istream& in, const char* magic) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw ConfigError(std::string("expected a ") + magic + " container");
  }
}

void write_reference(std::ostream& out, const ProductReference& ref) {
  for (const auto& f : ref.factors()) {
    put_u8(out, f.kind() == ReferenceDensity1D::Kind::uniform ? 0 : 1);
    put_f64(out, f.lower());
    put_f64(out, f.upper());
  }
}

ProductReference read_reference(std::istream& in, std::size_t d) {
  std::vector<ReferenceDensity1D> factors;
  for (std::size_t k = 0; k < d; ++k) {
    const auto kind = get_u8(in);
    const double lower = get_f64(in), upper = get_f64(in);
    if (kind == 0) {
      factors.push_back(ReferenceDensity1D::uniform(lower, upper));
    } else if (kind == 1) {
      factors.push_back(ReferenceDensity1D::truncated_normal(upper));
      if (lower != -upper) throw ConfigError("truncated normal reference must be symmetric");
    } else {
      throw ConfigError("unknown reference kind in container");
    }
  }
  return ProductReference(std::move(factors));
}

nlohmann::json layer_to_json(const LayerInfo& info) {
  return {{"beta", info.beta},         {"gamma", info.gamma},
          {"ranks", info.ranks},       {"residual", info.residual},
          {"evaluations", info.evaluations}, {"sweeps", info.sweeps},
          {"rank_capped", info.rank_capped}, {"log_shift", info.log_shift},
          {"tau", info.tau},           {"zeta", info.zeta}};
}

LayerInfo layer_from_json(const nlohmann::json& j) {
  LayerInfo info;
  info.beta = j.at("beta").get<double>();
  info.gamma = j.at("gamma").get<double>();
  info.ranks = j.at("ranks").get<std::vector<std::size_t>>();
  info.residual = j.at("residual").get<double>();
  info.evaluations = j.at("evaluations").get<std::size_t>();
  info.sweeps = j.at("sweeps").get<std::size_t>();
  info.rank_capped = j.at("rank_capped").get<bool>();
  info.log_shift = j.at("log_shift").get<double>();
  info.tau = j.at("tau").get<double>();
  info.zeta = j.at("zeta").get<double>();
  return info;
}

}  // namespace

void write_ftt(std::ostream& out, const FunctionalTT& tt) {
  out.write("FTT1", 4);
  const std::size_t d = tt.dimension();
  put_u64(out, d);
  for (std::size_t k = 0; k <= d; ++k) put_u64(out, tt.rank(k));
  for (std::size_t k = 0; k < d; ++k) {
    put_u64(out, tt.basis(k).size());
    for (double x : tt.basis(k).nodes()) put_f64(out, x);
  }
  for (const auto& core : tt.cores()) {
    for (Eigen::Index i = 0; i < core.rows(); ++i) {
      for (Eigen::Index j = 0; j < core.cols(); ++j) put_f64(out, core(i, j));
    }
  }
  if (!out) throw ConfigError("failed to write FTT1 container");
}

FunctionalTT read_ftt(std::istream& in) {
  expect_magic(in, "FTT1");
  const auto d = get_count(in);
  std::vector<std::size_t> ranks(d + 1);
  for (auto& r : ranks) r = get_count(in);
  std::vector<UnivariateBasis> bases;
  for (std::size_t k = 0; k < d; ++k) {
    const auto n = get_count(in);
    std::vector<double> nodes(n);
    for (auto& x : nodes) x = get_f64(in);
    bases.emplace_back(std::move(nodes));
  }
  std::vector<CoreMatrix> cores;
  for (std::size_t k = 0; k < d; ++k) {
    CoreMatrix core(static_cast<Eigen::Index>(ranks[k] * bases[k].size()), static_cast<Eigen::Index>(ranks[k + 1]));
    for (Eigen::Index i = 0; i < core.rows(); ++i) {
      for (Eigen::Index j = 0; j < core.cols(); ++j) core(i, j) = get_f64(in);
    }
    cores.push_back(std::move(core));
  }
  return FunctionalTT(std::move(bases), std::move(cores));
}

void write_sirt(std::ostream& out, const SIRT& sirt) {
  out.write("SIR1", 4);
  write_ftt(out, sirt.tt());
  put_f64(out, sirt.tau());
  write_reference(out, sirt.reference());
  for (const auto& f : sirt.factors()) {
    put_u64(out, static_cast<std::uint64_t>(f.rows()));
    put_u64(out, static_cast<std::uint64_t>(f.cols()));
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) put_f64(out, f(i, j));
    }
  }
  put_f64(out, sirt.zeta());
  if (!out) throw ConfigError("failed to write SIR1 container");
}

SIRT read_sirt(std::istream& in) {
  expect_magic(in, "SIR1");
  FunctionalTT tt = read_ftt(in);
  const double tau = get_f64(in);
  ProductReference ref = read_reference(in, tt.dimension());
  std::vector<Eigen::MatrixXd> factors;
  for (std::size_t k = 0; k <= tt.dimension(); ++k) {
    const auto rows = get_count(in), cols = get_count(in);
    Eigen::MatrixXd f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = get_f64(in);
    }
    factors.push_back(std::move(f));
  }
  const double zeta = get_f64(in);
  return SIRT::from_parts(std::move(tt), tau, std::move(ref), std::move(factors), zeta);
}

void write_dirt(std::ostream& out, const DIRT& dirt, const std::string& metadata) {
  out.write("DIR1", 4);
  put_u64(out, dirt.layer_count());
  put_u64(out, dirt.dimension());
  write_reference(out, dirt.reference());
  for (const auto& layer : dirt.layers()) write_sirt(out, layer);
  nlohmann::json doc;
  doc["seed"] = dirt.seed();
  doc["layers"] = nlohmann::json::array();
  for (const auto& info : dirt.info()) doc["layers"].push_back(layer_to_json(info));
  doc["metadata"] = nlohmann::json::parse(metadata);
  const std::string text = doc.dump();
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("failed to write DIR1 container");
}

DIRT read_dirt(std::istream& in, std::string* metadata) {
  expect_magic(in, "DIR1");
  const auto layers = get_count(in);
  const auto d = get_count(in);
  DIRT dirt(read_reference(in, d));
  std::vector<SIRT> sirts;
  for (std::size_t l = 0; l < layers; ++l) sirts.push_back(read_sirt(in));
  const auto length = get_count(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw ConfigError("truncated DIR1 metadata");
  const auto doc = nlohmann::json::parse(text);
  const auto& records = doc.at("layers");
  if (records.size() != layers) throw ConfigError("DIR1 metadata does not match the layer count");
  for (std::size_t l = 0; l < layers; ++l) dirt.add_layer(std::move(sirts[l]), layer_from_json(records[l]));
  dirt.set_seed(doc.at("seed").get<std::uint64_t>());
  if (metadata) *metadata = doc.at("metadata").dump();
  return dirt;
}

void save_dirt(const std::string& path, const DIRT& dirt, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  write_dirt(out, dirt, metadata);
}

DIRT load_dirt(const std::string& path, std::string* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_dirt(in, metadata);
}

}  // namespace ttdis

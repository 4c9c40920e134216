// sepdet/model_io.hpp

// Copyright 2026 the sepdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Versioned binary model container: magic, format version, config (JSON),
// component kind, then named float32 parameter and buffer arrays.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sepdet/config_json.hpp"
#include "sepdet/detector.hpp"
#include "sepdet/errors.hpp"

namespace sepdet {

inline constexpr char kModelMagic[8] = {'S', 'E', 'P', 'D', 'M', 'D', 'L', '1'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("model file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw FormatError("model file truncated");
  return s;
}

template <typename Real>
void write_store(std::ostream& os, const nn::ParamStore<Real>& ps) {
  write_u32(os, static_cast<std::uint32_t>(ps.entries.size()));
  for (const auto& e : ps.entries) {
    write_string(os, e.name);
    write_u32(os, static_cast<std::uint32_t>(e.shape.size()));
    for (int d : e.shape) write_u32(os, static_cast<std::uint32_t>(d));
    std::vector<float> out(e.count);
    for (std::size_t i = 0; i < e.count; ++i)
      out[i] = static_cast<float>(ps.data[e.offset + i]);
    os.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size() * sizeof(float)));
  }
}

template <typename Real>
void read_store_into(std::istream& is, nn::ParamStore<Real>& ps) {
  const std::uint32_t n = read_u32(is);
  if (n != ps.entries.size())
    throw FormatError("model file: parameter table size mismatch");
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::string name = read_string(is);
    const auto* e = ps.find(name);
    if (e == nullptr) throw FormatError("model file: unknown parameter " + name);
    const std::uint32_t nd = read_u32(is);
    if (nd != e->shape.size())
      throw FormatError("model file: rank mismatch for " + name);
    for (std::uint32_t d = 0; d < nd; ++d) {
      if (read_u32(is) != static_cast<std::uint32_t>(e->shape[d]))
        throw FormatError("model file: shape mismatch for " + name);
    }
    std::vector<float> in(e->count);
    is.read(reinterpret_cast<char*>(in.data()),
            static_cast<std::streamsize>(in.size() * sizeof(float)));
    if (!is) throw FormatError("model file truncated in " + name);
    for (std::size_t i = 0; i < e->count; ++i)
      ps.data[e->offset + i] = static_cast<Real>(in[i]);
  }
}

}  // namespace detail

template <typename Real>
void write_model(std::ostream& os, const BasicDetectorModel<Real>& model) {
  os.write(kModelMagic, 8);
  detail::write_u32(os, kModelFormatVersion);
  nlohmann::json cfg = model.config;
  detail::write_string(os, cfg.dump());
  detail::write_string(os, to_string(model.component_kind));
  detail::write_store(os, model.net.params());
  detail::write_store(os, model.net.buffers());
}

template <typename Real>
void save_model(const BasicDetectorModel<Real>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_model(os, model);
  if (!os) throw IoError("cannot write " + path);
}

template <typename Real = float>
BasicDetectorModel<Real> read_model(std::istream& is, const std::string& name) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kModelMagic, 8) != 0)
    throw FormatError(name + ": not a detector model file");
  const std::uint32_t version = detail::read_u32(is);
  if (version != kModelFormatVersion)
    throw FormatError(name + ": incompatible model format version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  BasicDetectorModel<Real> model;
  const std::string cfg_json = detail::read_string(is);
  model.config = nlohmann::json::parse(cfg_json).get<DetectorConfig>();
  model.component_kind = component_kind_from_string(detail::read_string(is));
  model.net.build(model.config);
  detail::read_store_into(is, model.net.params());
  detail::read_store_into(is, model.net.buffers());
  return model;
}

template <typename Real = float>
BasicDetectorModel<Real> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_model<Real>(is, path);
}

}  // namespace sepdet

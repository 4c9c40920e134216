// sepdet/config_json.hpp

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

#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepdet/detector.hpp"
#include "sepdet/errors.hpp"
#include "sepdet/separation.hpp"

namespace sepdet {

// Rejects keys outside the given set; schema errors should be loud.
inline void require_known_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.find(it.key()) == allowed.end())
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline void to_json(nlohmann::json& j, const SincLayerConfig& c) {
  j = {{"num_filters", c.num_filters},
       {"kernel_len", c.kernel_len},
       {"min_low_hz", c.min_low_hz},
       {"min_band_hz", c.min_band_hz},
       {"learnable", c.learnable}};
}

inline void from_json(const nlohmann::json& j, SincLayerConfig& c) {
  require_known_keys(j, {"num_filters", "kernel_len", "min_low_hz", "min_band_hz", "learnable"},
                     "sinc");
  c.num_filters = j.value("num_filters", c.num_filters);
  c.kernel_len = j.value("kernel_len", c.kernel_len);
  c.min_low_hz = j.value("min_low_hz", c.min_low_hz);
  c.min_band_hz = j.value("min_band_hz", c.min_band_hz);
  c.learnable = j.value("learnable", c.learnable);
}

inline void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = {{"sinc", c.sinc},
       {"res_blocks", c.res_blocks},
       {"gru_hidden", c.gru_hidden},
       {"gru_layers", c.gru_layers},
       {"fc_hidden", c.fc_hidden},
       {"num_classes", c.num_classes},
       {"input_len", c.input_len},
       {"sample_rate", c.sample_rate},
       {"leaky_slope", c.leaky_slope},
       {"bn_momentum", c.bn_momentum},
       {"bn_eps", c.bn_eps},
       {"pool_size", c.pool_size}};
}

inline void from_json(const nlohmann::json& j, DetectorConfig& c) {
  require_known_keys(j,
                     {"sinc", "res_blocks", "gru_hidden", "gru_layers", "fc_hidden",
                      "num_classes", "input_len", "sample_rate", "leaky_slope",
                      "bn_momentum", "bn_eps", "pool_size"},
                     "detector");
  if (j.contains("sinc")) c.sinc = j.at("sinc").get<SincLayerConfig>();
  if (j.contains("res_blocks"))
    c.res_blocks = j.at("res_blocks").get<std::vector<std::pair<int, int>>>();
  c.gru_hidden = j.value("gru_hidden", c.gru_hidden);
  c.gru_layers = j.value("gru_layers", c.gru_layers);
  c.fc_hidden = j.value("fc_hidden", c.fc_hidden);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.input_len = j.value("input_len", c.input_len);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
  c.bn_eps = j.value("bn_eps", c.bn_eps);
  c.pool_size = j.value("pool_size", c.pool_size);
}

inline void to_json(nlohmann::json& j, const SeparatorConfig& c) {
  j = {{"fft_size", c.fft_size},
       {"hop", c.hop},
       {"window", c.window},
       {"noise_percentile", c.noise_percentile},
       {"oversubtraction", c.oversubtraction},
       {"gain_floor", c.gain_floor}};
}

inline void from_json(const nlohmann::json& j, SeparatorConfig& c) {
  require_known_keys(
      j, {"fft_size", "hop", "window", "noise_percentile", "oversubtraction", "gain_floor"},
      "separator");
  c.fft_size = j.value("fft_size", c.fft_size);
  c.hop = j.value("hop", c.hop);
  c.window = j.value("window", c.window);
  c.noise_percentile = j.value("noise_percentile", c.noise_percentile);
  c.oversubtraction = j.value("oversubtraction", c.oversubtraction);
  c.gain_floor = j.value("gain_floor", c.gain_floor);
}

}  // namespace sepdet

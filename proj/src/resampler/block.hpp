// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>

#include "diva/resampler.hpp"

namespace diva::resampler::detail {

BlockParams init_block(const DivaConfig& config, double gate, std::mt19937_64& rng);
void add_block(ParameterSet& ps, const std::string& prefix, const BlockParams& b,
               bool with_gates);
BlockParams clone_block(const BlockParams& b);

}  // namespace diva::resampler::detail

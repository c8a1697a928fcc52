// SPDX-License-Identifier: Apache-2.0
//
// Binary parameter container:
//   "DIVA" | version u8 | record count u32
//   per record: name length u32 | name bytes | rank u32 | dims u64... |
//               float64 payload
// All integers and floats little-endian.

#pragma once

#include <filesystem>
#include <string>

#include "diva/params.hpp"

namespace diva {

inline constexpr std::uint8_t kCheckpointVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encode_checkpoint(const ParameterSet& params);
ParameterSet decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace diva

#pragma once

#include <array>

#include "che/bytes.hpp"

namespace che {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const Bytes& data);
Bytes sha256_bytes(const Bytes& data);

} // namespace che

#pragma once

#include <cstdint>

#include "mcsim/engine.hpp"

namespace mcsim {

/// PDCP sequence number, unique within one stream.
using Seq = std::uint64_t;

struct PdcpPdu {
  Seq seq = 0;
  std::int64_t size_bits = 0;
  std::uint64_t frame_id = 0;
  std::int32_t packet_index = 0;
  Time created = 0.0;  // arrival of the SDU at the MgNB
};

}  // namespace mcsim

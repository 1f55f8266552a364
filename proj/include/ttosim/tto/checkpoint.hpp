// checkpoint.hpp: binary round-trip of a TTOState

#pragma once

#include <iosfwd>
#include <stdexcept>

#include "ttosim/tto/state.hpp"

namespace ttosim::tto {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Layout (little-endian host order): magic "TTOS", u32 version, i32 sites,
/// i32 local dim, i32 node count, i32 gauge center, f64 cumulative truncation,
/// then per node in id order: u32 rank, per leg (u32 label length, label bytes,
/// i64 dim), followed by the raw complex data.
void write_state(std::ostream& out, const TTOState& s);
TTOState read_state(std::istream& in);

} // namespace ttosim::tto

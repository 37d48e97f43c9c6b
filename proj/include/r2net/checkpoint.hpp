#pragma once

#include <filesystem>
#include <iosfwd>

#include "r2net/params.hpp"

namespace r2net {

// Text checkpoint, version 1:
//
//   r2net-checkpoint 1
//   <tensor count>
//   then per tensor, in registration order:
//   <name> <rank> <extent_0> ... <extent_{rank-1}>
//   <values, space separated, shortest round-trip decimal form>
//
// Values round-trip bit-exactly, so identical parameters give identical files.
void write_checkpoint(const ParamStore& params, std::ostream& out);
void save_checkpoint(const ParamStore& params, const std::filesystem::path& path);

// Overwrites values in `params`. Names, order and shapes must match.
void read_checkpoint(ParamStore& params, std::istream& in, const std::string& source = "<stream>");
void load_checkpoint(ParamStore& params, const std::filesystem::path& path);

}  // namespace r2net

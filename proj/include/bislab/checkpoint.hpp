#pragma once

#include "bislab/micro_model.hpp"

#include <iosfwd>
#include <string>

namespace bislab {

// Binary checkpoint, all integers u32 and all values f64, little-endian:
//
//   "BISLABCK"  u32 version(=1)  u32 frozen  u32 array_count(=4)
//   per array:  u32 name_len  name bytes  u32 rows  u32 cols  rows*cols f64 (row-major)
//
// Arrays are w1, b1, w2, b2 in that order. Loading restores the parameters
// bit-for-bit, including the freeze flag.

void save_checkpoint(std::ostream& out, const MicroModel& model);
MicroModel load_checkpoint(std::istream& in);

void save_checkpoint_file(const std::string& path, const MicroModel& model);
MicroModel load_checkpoint_file(const std::string& path);

} // namespace bislab

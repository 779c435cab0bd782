#pragma once

#include <iosfwd>

#include "adaconv/tensor.hpp"

namespace adaconv {

// Binary tensor record: u32 rank, u32 dims..., then raw little-endian 32-bit
// floats. Shared by checkpoints and dataset sample files.
void write_tensor_record(std::ostream& os, const Tensor& t);
Tensor read_tensor_record(std::istream& is);

}  // namespace adaconv

#include "adaconv/tensor_io.hpp"

#include <istream>
#include <ostream>

#include "adaconv/errors.hpp"

namespace adaconv {

void write_tensor_record(std::ostream& os, const Tensor& t) {
  uint32_t rank = static_cast<uint32_t>(t.rank());
  os.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (int i = 0; i < t.rank(); ++i) {
    uint32_t d = static_cast<uint32_t>(t.dim(i));
    os.write(reinterpret_cast<const char*>(&d), sizeof(d));
  }
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(float)));
}

Tensor read_tensor_record(std::istream& is) {
  uint32_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), sizeof(rank));
  if (!is) throw FormatError("tensor record truncated");
  if (rank == 0 || rank > 8) throw FormatError("tensor record rank implausible");
  std::vector<int> dims(rank);
  for (auto& d : dims) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is || v == 0 || v > (1u << 24)) throw FormatError("tensor record dims implausible");
    d = static_cast<int>(v);
  }
  Tensor t(dims);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!is) throw FormatError("tensor record truncated");
  return t;
}

}  // namespace adaconv

#include "hebert/common/binio.hpp"

#include <fstream>
#include <iterator>

namespace hebert {

std::vector<std::uint8_t> read_file(const std::string& path, std::string_view module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(module, ErrorCode::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes, std::string_view module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(module, ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(module, ErrorCode::Io, "short write to " + path);
}

}  // namespace hebert

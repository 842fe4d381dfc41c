#include "bbnet/nn/checkpoint.hpp"

#include "bbnet/binary_io.hpp"

namespace bbnet::nn {

namespace {
constexpr std::string_view kMagic = "BBNET1";
}

std::vector<char> encode_checkpoint(const std::vector<TensorRecord>& records) {
  io::Writer w;
  w.bytes(kMagic);
  for (const auto& r : records) {
    if (numel(r.shape) != r.values.size()) {
      throw ShapeError("checkpoint record '" + r.name + "' has " + std::to_string(r.values.size()) +
                       " values for shape " + shape_string(r.shape));
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.name.size()));
    w.bytes(r.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.shape.size()));
    for (std::size_t d : r.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : r.values) w.put<float>(v);
  }
  return std::move(w.buffer());
}

std::vector<TensorRecord> decode_checkpoint(const std::vector<char>& bytes) {
  io::Reader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size(), "magic") != kMagic) {
    throw FormatError("not a checkpoint: bad magic", 0);
  }
  std::vector<TensorRecord> out;
  while (!r.at_end()) {
    TensorRecord rec;
    const auto name_len = r.get<std::uint32_t>("name length");
    rec.name = r.bytes(name_len, "tensor name");
    const std::size_t rank_at = r.offset();
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), rank_at);
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::size_t at = r.offset();
      const auto d = r.get<std::uint32_t>("dimension");
      if (d == 0) throw FormatError("zero dimension in tensor '" + rec.name + "'", at);
      rec.shape.push_back(d);
    }
    const std::size_t count = numel(rec.shape);
    if (count > r.remaining() / 4) {
      throw FormatError("truncated record: tensor '" + rec.name + "' needs " + std::to_string(count * 4) + " bytes",
                        r.offset());
    }
    rec.values.resize(count);
    for (float& v : rec.values) v = r.get<float>("tensor value");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<TensorRecord>& records) {
  io::write_file(path, encode_checkpoint(records));
}

std::vector<TensorRecord> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace bbnet::nn

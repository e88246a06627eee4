// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/numerics/checkpoint.hpp"

#include "fgt2m/common/binary_io.hpp"

namespace fgt2m::numerics {

std::string Checkpoint::serialize() const {
  ByteWriter w;
  w.raw("FGCK");
  w.u16(kVersion);
  const std::string meta = metadata.dump();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  }
  return w.str();
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.raw(4) != "FGCK") throw Error("checkpoint", "bad_magic", "not a checkpoint file (magic mismatch)");
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw Error("checkpoint", "bad_version", "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t meta_len = r.u32();
  try {
    ck.metadata = nlohmann::json::parse(r.raw(meta_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("checkpoint", "bad_metadata", std::string("metadata is not JSON: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.raw(r.u16());
    const std::uint8_t rank = r.u8();
    Shape shape;
    for (std::uint8_t k = 0; k < rank; ++k) shape.push_back(r.u32());
    Tensor t(shape);
    for (double& v : t.data()) v = r.f64();
    ck.params.add(name, std::move(t));
  }
  if (r.remaining() != 0) {
    throw Error("checkpoint", "trailing_bytes", "unexpected data after byte offset " + std::to_string(r.offset()));
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const { write_file_atomic(path, serialize(), "checkpoint"); }

Checkpoint Checkpoint::load(const std::string& path) { return deserialize(read_file(path, "checkpoint")); }

}  // namespace fgt2m::numerics

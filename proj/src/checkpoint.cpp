#include "meshcycle/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "meshcycle/common.hpp"

namespace mc {

namespace {
constexpr char kMagic[8] = {'M', 'C', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_pod(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (static_cast<std::size_t>(in.gcount()) != sizeof v)
    throw StructuralError("checkpoint '" + path + "': truncated");
  return v;
}
}  // namespace

void Checkpoint::put(const std::string& name, std::vector<std::int64_t> shape,
                     std::vector<double> data) {
  blobs[name] = {std::move(shape), std::move(data)};
}

void Checkpoint::put_scalar(const std::string& name, double v) { put(name, {}, {v}); }

const std::vector<double>& Checkpoint::data(const std::string& name) const {
  auto it = blobs.find(name);
  if (it == blobs.end()) throw ConfigError("checkpoint: missing entry " + name);
  return it->second.second;
}

const std::vector<std::int64_t>& Checkpoint::shape(const std::string& name) const {
  auto it = blobs.find(name);
  if (it == blobs.end()) throw ConfigError("checkpoint: missing entry " + name);
  return it->second.first;
}

double Checkpoint::scalar(const std::string& name) const {
  const auto& d = data(name);
  if (d.size() != 1) throw ConfigError("checkpoint: entry is not a scalar: " + name);
  return d[0];
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot open for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  put_pod<std::uint64_t>(out, ckpt.config_guard.size());
  out.write(ckpt.config_guard.data(), static_cast<std::streamsize>(ckpt.config_guard.size()));
  put_pod<std::uint64_t>(out, ckpt.blobs.size());
  for (const auto& [name, entry] : ckpt.blobs) {  // std::map: sorted, canonical bytes
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entry.first.size()));
    for (auto d : entry.first) put_pod<std::int64_t>(out, d);
    put_pod<std::uint64_t>(out, entry.second.size());
    out.write(reinterpret_cast<const char*>(entry.second.data()),
              static_cast<std::streamsize>(sizeof(double) * entry.second.size()));
  }
  if (!out) throw StructuralError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw StructuralError("checkpoint '" + path + "': bad magic");

  Checkpoint ckpt;
  const auto guard_len = get_pod<std::uint64_t>(in, path);
  ckpt.config_guard.resize(guard_len);
  in.read(ckpt.config_guard.data(), static_cast<std::streamsize>(guard_len));
  if (static_cast<std::uint64_t>(in.gcount()) != guard_len)
    throw StructuralError("checkpoint '" + path + "': truncated guard");

  const auto count = get_pod<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (static_cast<std::uint32_t>(in.gcount()) != name_len)
      throw StructuralError("checkpoint '" + path + "': truncated name");
    const auto ndim = get_pod<std::uint32_t>(in, path);
    std::vector<std::int64_t> shape(ndim);
    for (auto& d : shape) d = get_pod<std::int64_t>(in, path);
    const auto len = get_pod<std::uint64_t>(in, path);
    std::vector<double> data(len);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double) * len));
    if (static_cast<std::uint64_t>(in.gcount()) != sizeof(double) * len)
      throw StructuralError("checkpoint '" + path + "': truncated data for " + name);
    ckpt.blobs[name] = {std::move(shape), std::move(data)};
  }
  return ckpt;
}

}  // namespace mc

#include "meshcycle/trajfile.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshcycle/common.hpp"

namespace mc {

namespace {

constexpr const char* kMagic = "MESHTRAJ 1";

static_assert(std::endian::native == std::endian::little,
              "trajectory files are little-endian; this platform is not");

[[noreturn]] void parse_fail(const std::string& path, std::int64_t offset,
                             const std::string& what) {
  throw StructuralError("trajectory file '" + path + "': " + what + " (at byte " +
                        std::to_string(offset) + ")");
}

void write_block(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_block(std::ifstream& in, void* data, std::size_t bytes, const std::string& path,
                const std::string& what) {
  const std::int64_t offset = in.tellg();
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes)
    parse_fail(path, offset, "truncated while reading " + what);
}

}  // namespace

void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot open for writing: " + path);

  const std::int64_t n = traj.mesh.num_nodes();
  const int d = traj.mesh.dim();
  const std::int64_t t = traj.num_frames();
  const std::int64_t f = traj.num_fields();
  const std::int64_t c = traj.mesh.num_cells();

  char buf[64];
  out << kMagic << "\n";
  out << "nodes " << n << "\n";
  out << "dim " << d << "\n";
  out << "frames " << t << "\n";
  out << "fields " << f;
  for (const auto& name : traj.field_names) out << " " << name;
  out << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", traj.dt);
  out << "dt " << buf << "\n";
  out << "globals " << traj.globals.size();
  for (const auto& [name, val] : traj.globals) {
    std::snprintf(buf, sizeof buf, "%.17g", val);
    out << " " << name << " " << buf;
  }
  out << "\n";
  out << "cells " << c << " " << traj.mesh.simplex_size << "\n";
  out << "endian little\n";
  out << "HEADER_END\n";

  write_block(out, traj.mesh.positions.data().data(), sizeof(double) * n * d);
  write_block(out, traj.mesh.node_type.data(), sizeof(std::int32_t) * n);
  write_block(out, traj.mesh.cells.data(), sizeof(std::int64_t) * traj.mesh.cells.size());
  for (const auto& frame : traj.frames)
    write_block(out, frame.data().data(), sizeof(double) * n * f);
  if (!out) throw StructuralError("write failed: " + path);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open: " + path);

  auto next_line = [&](const std::string& what) {
    const std::int64_t offset = in.tellg();
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, offset, "missing header line: " + what);
    return std::pair{line, offset};
  };

  auto [magic, magic_off] = next_line("magic");
  if (magic != kMagic) parse_fail(path, magic_off, "bad magic or unsupported version");

  Trajectory traj;
  std::int64_t n = -1, t = -1, f = -1, c = -1;
  int d = -1, simplex = -1;
  bool header_done = false;
  while (!header_done) {
    auto [line, offset] = next_line("header");
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "HEADER_END") {
      header_done = true;
    } else if (key == "nodes") {
      ls >> n;
    } else if (key == "dim") {
      ls >> d;
    } else if (key == "frames") {
      ls >> t;
    } else if (key == "fields") {
      ls >> f;
      for (std::int64_t i = 0; i < f; ++i) {
        std::string name;
        ls >> name;
        traj.field_names.push_back(name);
      }
    } else if (key == "dt") {
      ls >> traj.dt;
    } else if (key == "globals") {
      std::size_t g = 0;
      ls >> g;
      for (std::size_t i = 0; i < g; ++i) {
        std::string name;
        double val = 0.0;
        ls >> name >> val;
        traj.globals.push_back({name, val});
      }
    } else if (key == "cells") {
      ls >> c >> simplex;
    } else if (key == "endian") {
      std::string e;
      ls >> e;
      if (e != "little") parse_fail(path, offset, "unsupported endianness: " + e);
    } else {
      parse_fail(path, offset, "unknown header key: " + key);
    }
    if (ls.fail()) parse_fail(path, offset, "malformed header line: " + line);
  }
  if (n < 0 || t < 0 || f < 0 || c < 0 || d < 0 || simplex < 0)
    parse_fail(path, in.tellg(), "incomplete header");

  std::vector<double> pos(static_cast<std::size_t>(n * d));
  read_block(in, pos.data(), sizeof(double) * pos.size(), path, "positions");
  traj.mesh.positions = ad::Tensor::from({n, d}, std::move(pos));
  traj.mesh.node_type.resize(static_cast<std::size_t>(n));
  read_block(in, traj.mesh.node_type.data(), sizeof(std::int32_t) * n, path, "node types");
  traj.mesh.simplex_size = simplex;
  traj.mesh.cells.resize(static_cast<std::size_t>(c * simplex));
  read_block(in, traj.mesh.cells.data(), sizeof(std::int64_t) * traj.mesh.cells.size(), path,
             "cells");

  for (std::int64_t i = 0; i < t; ++i) {
    std::vector<double> frame(static_cast<std::size_t>(n * f));
    const std::int64_t offset = in.tellg();
    in.read(reinterpret_cast<char*>(frame.data()),
            static_cast<std::streamsize>(sizeof(double) * frame.size()));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(double) * frame.size())
      parse_fail(path, offset,
                 "truncated body: expected frame " + std::to_string(i) + " of " +
                     std::to_string(t));
    traj.frames.push_back(ad::Tensor::from({n, f}, std::move(frame)));
  }

  traj.mesh.validate();
  return traj;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  nlohmann::json j;
  j["version"] = 1;
  j["train"] = manifest.train;
  j["test"] = manifest.test;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StructuralError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("manifest '" + path + "': " + e.what());
  }
  Manifest m;
  m.train = j.at("train").get<std::vector<std::string>>();
  m.test = j.at("test").get<std::vector<std::string>>();
  m.dir = std::filesystem::path(path).parent_path().string();
  return m;
}

}  // namespace mc

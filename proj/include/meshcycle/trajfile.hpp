#pragma once
// Trajectory container format: a line-based text header followed by raw
// little-endian binary blocks (positions, node types, cells, frames). Doubles
// round-trip bit-exactly. The manifest is a small JSON file listing the
// train/test split.

#include <string>
#include <vector>

#include "meshcycle/synthdata.hpp"

namespace mc {

void save_trajectory(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory(const std::string& path);

struct Manifest {
  std::vector<std::string> train;  // file names relative to the manifest dir
  std::vector<std::string> test;
  std::string dir;  // set on load
};

void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

}  // namespace mc

#pragma once
// Versioned binary checkpoint: a named map of double blobs (parameters,
// optimizer moments, normalizer statistics, counters) plus one config-guard
// string. Round-trips bit-exactly.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mc {

struct Checkpoint {
  std::map<std::string, std::pair<std::vector<std::int64_t>, std::vector<double>>> blobs;
  std::string config_guard;  // compared on resume

  void put(const std::string& name, std::vector<std::int64_t> shape, std::vector<double> data);
  void put_scalar(const std::string& name, double v);
  bool has(const std::string& name) const { return blobs.count(name) > 0; }
  const std::vector<double>& data(const std::string& name) const;
  const std::vector<std::int64_t>& shape(const std::string& name) const;
  double scalar(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mc

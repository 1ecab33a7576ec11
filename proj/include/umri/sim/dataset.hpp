#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "umri/sim/phantom.hpp"

namespace umri::sim {

enum class Split : int { Train = 0, Val = 1, Test = 2 };

Split split_from_string(const std::string& s);
std::string split_to_string(Split s);

struct ManifestEntry {
  std::string id;
  PhantomFamily family = PhantomFamily::A;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  std::string file;  // volume path relative to the dataset directory
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> select(PhantomFamily family, Split split) const;
  std::vector<const ManifestEntry*> select(Split split) const;
};

// Family-stratified deterministic split. fractions = (train, val, test) and
// must sum to 1; sizes use largest-remainder rounding.
DatasetManifest build_manifest(const std::map<PhantomFamily, int>& counts,
                               const std::array<double, 3>& fractions, std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Volume file, magic "UMRIK1": u32 coils/height/width, u8 dtype (0 = f32),
// interleaved re/im samples in coil-major row-major order, then a u32
// length-prefixed UTF-8 metadata blob of key=value lines.
void write_volume(const std::string& path, const MultiCoilKSpaceT<float>& kspace,
                  const std::map<std::string, std::string>& metadata);

struct Volume {
  MultiCoilKSpaceT<float> kspace;
  std::map<std::string, std::string> metadata;
};

Volume read_volume(const std::string& path);

}  // namespace umri::sim

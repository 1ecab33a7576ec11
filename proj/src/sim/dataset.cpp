#include "umri/sim/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "umri/core/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "volume serialization assumes a little-endian host");

namespace umri::sim {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ConfigError("unknown split '" + s + "'");
}

std::string split_to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw ConfigError("invalid split value");
}

std::vector<const ManifestEntry*> DatasetManifest::select(PhantomFamily family, Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.family == family && e.split == split) out.push_back(&e);
  return out;
}

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

DatasetManifest build_manifest(const std::map<PhantomFamily, int>& counts,
                               const std::array<double, 3>& fractions, std::uint64_t seed) {
  const double fsum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(fsum - 1.0) > 1e-9)
    throw ConfigError("manifest: split fractions sum to " + std::to_string(fsum) + ", expected 1");
  for (double f : fractions)
    if (f < 0.0) throw ConfigError("manifest: negative split fraction");

  DatasetManifest manifest;
  for (const auto& [family, count] : counts) {
    if (count < 0) throw ConfigError("manifest: negative sample count");
    if (count == 0) continue;
    // largest-remainder rounding of the split sizes
    std::array<int, 3> sizes{};
    std::array<double, 3> rema{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
      const double exact = fractions[i] * count;
      sizes[i] = static_cast<int>(std::floor(exact));
      rema[i] = exact - sizes[i];
      assigned += sizes[i];
    }
    while (assigned < count) {
      int best = 0;
      for (int i = 1; i < 3; ++i)
        if (rema[i] > rema[best]) best = i;
      ++sizes[best];
      rema[best] = -1.0;
      ++assigned;
    }

    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "manifest/" + family_to_string(family)));
    rng.shuffle(order);

    for (int i = 0; i < count; ++i) {
      Split split = Split::Test;
      if (i < sizes[0]) {
        split = Split::Train;
      } else if (i < sizes[0] + sizes[1]) {
        split = Split::Val;
      }
      const int idx = order[i];
      char id[32];
      std::snprintf(id, sizeof(id), "%s%04d", family_to_string(family).c_str(), idx);
      ManifestEntry e;
      e.id = id;
      e.family = family;
      e.seed = derive_seed(seed, "sample/" + family_to_string(family), static_cast<std::uint64_t>(idx));
      e.split = split;
      e.file = std::string("volumes/") + id + ".umrik";
      manifest.entries.push_back(std::move(e));
    }
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "schema_version,id,family,seed,split,file\n";
  for (const auto& e : manifest.entries)
    out << "1," << e.id << "," << family_to_string(e.family) << "," << e.seed << ","
        << split_to_string(e.split) << "," << e.file << "\n";
  if (!out) throw IoError("write failed for " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty manifest");
  DatasetManifest manifest;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string schema, id, family, seed, split, file;
    if (!std::getline(ss, schema, ',') || !std::getline(ss, id, ',') ||
        !std::getline(ss, family, ',') || !std::getline(ss, seed, ',') ||
        !std::getline(ss, split, ',') || !std::getline(ss, file))
      throw FormatError(path + ": malformed manifest row '" + line + "'");
    ManifestEntry e;
    e.id = id;
    e.family = family_from_string(family);
    e.seed = std::stoull(seed);
    e.split = split_from_string(split);
    e.file = file;
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

namespace {

constexpr char kMagic[6] = {'U', 'M', 'R', 'I', 'K', '1'};

}  // namespace

void write_volume(const std::string& path, const MultiCoilKSpaceT<float>& kspace,
                  const std::map<std::string, std::string>& metadata) {
  if (kspace.coils < 1 || kspace.height < 1 || kspace.width < 1)
    throw ShapeError("write_volume: malformed k-space");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(kspace.coils),
                                 static_cast<std::uint32_t>(kspace.height),
                                 static_cast<std::uint32_t>(kspace.width)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const std::uint8_t dtype = 0;  // f32 interleaved
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(reinterpret_cast<const char*>(kspace.data.data()),
            static_cast<std::streamsize>(kspace.data.size() * sizeof(std::complex<float>)));
  std::string meta;
  for (const auto& [k, v] : metadata) meta += k + "=" + v + "\n";
  const std::uint32_t len = static_cast<std::uint32_t>(meta.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(meta.data(), len);
  if (!out) throw IoError("write failed for " + path);
}

Volume read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::size_t offset = 0;
  auto need = [&](void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw FormatError(path + ": truncated at byte offset " +
                        std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    offset += n;
  };

  char magic[6];
  need(magic, sizeof(magic));
  if (!std::equal(magic, magic + 6, kMagic))
    throw FormatError(path + ": bad magic, not a k-space volume file");
  std::uint32_t dims[3];
  need(dims, sizeof(dims));
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || dims[0] > 4096 || dims[1] > 65536 ||
      dims[2] > 65536)
    throw FormatError(path + ": implausible dimensions in header");
  std::uint8_t dtype;
  need(&dtype, 1);
  if (dtype != 0) throw FormatError(path + ": unsupported dtype byte " + std::to_string(dtype));

  Volume v;
  v.kspace = MultiCoilKSpaceT<float>(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                                     static_cast<int>(dims[2]));
  need(v.kspace.data.data(), v.kspace.data.size() * sizeof(std::complex<float>));
  std::uint32_t len;
  need(&len, sizeof(len));
  std::string meta(len, '\0');
  need(meta.data(), len);
  std::stringstream ss(meta);
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    v.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return v;
}

}  // namespace umri::sim

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "umri/mri/physics.hpp"
#include "umri/sim/dataset.hpp"

using namespace umri;
using sim::PhantomFamily;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path dir = fs::temp_directory_path() / "umri_test_datasim";
  fs::create_directories(dir);
  return dir;
}

// mean power in radial frequency bands; a cheap second-order fingerprint
std::vector<double> radial_power(const ComplexImageT<double>& img, int bands) {
  auto k = mri::fft2c(img);
  std::vector<double> power(bands, 0.0);
  std::vector<int> count(bands, 0);
  const int h = img.height, w = img.width;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double fy = (r - h / 2) / static_cast<double>(h / 2);
      const double fx = (c - w / 2) / static_cast<double>(w / 2);
      const double rad = std::min(1.0, std::sqrt(fx * fx + fy * fy));
      const int band = std::min(bands - 1, static_cast<int>(rad * bands));
      power[band] += std::norm(k.data[static_cast<std::size_t>(r) * w + c]);
      ++count[band];
    }
  for (int b = 0; b < bands; ++b) power[b] /= std::max(1, count[b]);
  return power;
}

}  // namespace

TEST_CASE("phantoms are deterministic, bounded, and family-distinct") {
  for (auto family : {PhantomFamily::A, PhantomFamily::B, PhantomFamily::C}) {
    sim::PhantomSpec spec{family, 64, 1234};
    const auto a = sim::generate_phantom<double>(spec);
    const auto b = sim::generate_phantom<double>(spec);
    CHECK(a.data == b.data);  // bitwise deterministic
    for (const auto& z : a.data) {
      CHECK(std::abs(z) <= 1.0 + 1e-12);
      CHECK(std::isfinite(z.real()));
    }
  }

  const auto fa = sim::generate_phantom<double>({PhantomFamily::A, 64, 77});
  const auto fb = sim::generate_phantom<double>({PhantomFamily::B, 64, 77});
  double max_diff = 0;
  for (std::size_t i = 0; i < fa.data.size(); ++i)
    max_diff = std::max(max_diff, std::abs(std::abs(fa.data[i]) - std::abs(fb.data[i])));
  CHECK(max_diff > 0.1);
}

TEST_CASE("phantoms carry genuinely complex smooth phase") {
  const auto img = sim::generate_phantom<double>({PhantomFamily::A, 64, 5});
  double imag_energy = 0, total = 0;
  for (const auto& z : img.data) {
    imag_energy += z.imag() * z.imag();
    total += std::norm(z);
  }
  CHECK(total > 0);
  CHECK(imag_energy / total > 1e-3);
}

TEST_CASE("family radial power spectra differ pairwise") {
  const int bands = 8;
  std::vector<std::vector<double>> mean_power(3, std::vector<double>(bands, 0.0));
  const int seeds = 6;
  for (int f = 0; f < 3; ++f)
    for (int s = 0; s < seeds; ++s) {
      const auto img =
          sim::generate_phantom<double>({static_cast<PhantomFamily>(f), 64, 1000 + s});
      const auto p = radial_power(img, bands);
      for (int b = 0; b < bands; ++b) mean_power[f][b] += p[b] / seeds;
    }
  // relative band-profile distance between families
  for (int f = 0; f < 3; ++f)
    for (int g = f + 1; g < 3; ++g) {
      double dist = 0;
      for (int b = 0; b < bands; ++b) {
        const double denom = mean_power[f][b] + mean_power[g][b];
        dist += std::abs(mean_power[f][b] - mean_power[g][b]) / denom;
      }
      CAPTURE(f);
      CAPTURE(g);
      CHECK(dist > 0.2);
    }
}

TEST_CASE("simulated coils are normalized and pairwise distinct") {
  const auto sens = sim::simulate_coils<double>(4, 32);
  for (int p = 0; p < 32 * 32; ++p) {
    double acc = 0;
    for (int i = 0; i < 4; ++i) acc += std::norm(sens.coil(i)[p]);
    CHECK(std::abs(acc - 1.0) < 1e-6);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double diff = 0;
      for (int p = 0; p < 32 * 32; ++p) diff += std::abs(sens.coil(i)[p] - sens.coil(j)[p]);
      CHECK(diff > 1.0);
    }

  const auto single = sim::simulate_coils<double>(1, 16);
  for (int p = 0; p < 16 * 16; ++p)
    CHECK(std::abs(std::abs(single.coil(0)[p]) - 1.0) < 1e-9);
}

TEST_CASE("noiseless synthesis inverts back to the phantom magnitude") {
  const auto img = sim::generate_phantom<double>({PhantomFamily::A, 32, 9});
  const auto sens = sim::simulate_coils<double>(3, 32);
  const auto k = sim::synthesize_kspace(img, sens, 0.0, 1);
  const auto recon = mri::zero_filled_rss(k);
  double err = 0, scale = 0;
  for (int p = 0; p < 32 * 32; ++p) {
    err = std::max(err, std::abs(recon[p] - std::abs(img.data[p])));
    scale = std::max(scale, std::abs(img.data[p]));
  }
  CHECK(err / scale < 1e-9);
}

TEST_CASE("noise variance matches noise_std^2 within 5 percent") {
  ComplexImageT<double> zero(32, 32);
  SensitivityMapsT<double> unit(10, 32, 32);
  for (auto& z : unit.data) z = {1, 0};
  // zero image, so the k-space is pure noise; 10 coils x 32x32 = 10240 samples
  const double noise_std = 0.37;
  const auto k = sim::synthesize_kspace(zero, unit, noise_std, 99);
  double var_re = 0, var_im = 0;
  for (const auto& z : k.data) {
    var_re += z.real() * z.real();
    var_im += z.imag() * z.imag();
  }
  var_re /= static_cast<double>(k.data.size());
  var_im /= static_cast<double>(k.data.size());
  CHECK(std::abs(var_re - noise_std * noise_std) / (noise_std * noise_std) < 0.05);
  CHECK(std::abs(var_im - noise_std * noise_std) / (noise_std * noise_std) < 0.05);

  const auto k2 = sim::synthesize_kspace(zero, unit, noise_std, 100);
  CHECK(k.data != k2.data);  // different seeds, different realizations
}

TEST_CASE("manifest honors fractions exactly and is deterministic") {
  std::map<PhantomFamily, int> counts{{PhantomFamily::A, 100}};
  const auto m = sim::build_manifest(counts, {0.7, 0.1, 0.2}, 5);
  CHECK(m.select(PhantomFamily::A, sim::Split::Train).size() == 70);
  CHECK(m.select(PhantomFamily::A, sim::Split::Val).size() == 10);
  CHECK(m.select(PhantomFamily::A, sim::Split::Test).size() == 20);

  const auto m2 = sim::build_manifest(counts, {0.7, 0.1, 0.2}, 5);
  REQUIRE(m.entries.size() == m2.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(m.entries[i].id == m2.entries[i].id);
    CHECK(m.entries[i].seed == m2.entries[i].seed);
    CHECK(m.entries[i].split == m2.entries[i].split);
  }

  CHECK_THROWS_AS((void)sim::build_manifest(counts, {0.5, 0.2, 0.2}, 5), ConfigError);

  // desk default: 320 A samples at (0.625, 0.125, 0.25) give 200/40/80
  std::map<PhantomFamily, int> desk{{PhantomFamily::A, 320}};
  const auto dm = sim::build_manifest(desk, {0.625, 0.125, 0.25}, 1);
  CHECK(dm.select(PhantomFamily::A, sim::Split::Train).size() == 200);
  CHECK(dm.select(PhantomFamily::A, sim::Split::Val).size() == 40);
  CHECK(dm.select(PhantomFamily::A, sim::Split::Test).size() == 80);

  // splits are disjoint by construction: ids are unique
  std::set<std::string> ids;
  for (const auto& e : dm.entries) ids.insert(e.id);
  CHECK(ids.size() == dm.entries.size());
}

TEST_CASE("manifest csv round trip") {
  const fs::path dir = tmp_dir();
  std::map<PhantomFamily, int> counts{{PhantomFamily::A, 10}, {PhantomFamily::B, 5}};
  const auto m = sim::build_manifest(counts, {0.6, 0.2, 0.2}, 3);
  const std::string path = (dir / "manifest.csv").string();
  sim::write_manifest(m, path);
  const auto r = sim::read_manifest(path);
  REQUIRE(r.entries.size() == m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(r.entries[i].id == m.entries[i].id);
    CHECK(r.entries[i].family == m.entries[i].family);
    CHECK(r.entries[i].seed == m.entries[i].seed);
    CHECK(r.entries[i].split == m.entries[i].split);
    CHECK(r.entries[i].file == m.entries[i].file);
  }
}

TEST_CASE("volume file: bitwise round trip, truncation diagnostics, metadata") {
  Rng rng(51);
  const fs::path dir = tmp_dir();
  const std::string path = (dir / "vol.umrik").string();

  MultiCoilKSpaceT<float> k(3, 8, 8);
  for (auto& z : k.data)
    z = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))};
  const std::map<std::string, std::string> meta{
      {"family", "A"}, {"seed", "42"}, {"noise_std", "0.01"}};
  sim::write_volume(path, k, meta);
  const auto v = sim::read_volume(path);
  CHECK(v.kspace.coils == 3);
  CHECK(std::memcmp(v.kspace.data.data(), k.data.data(),
                    k.data.size() * sizeof(std::complex<float>)) == 0);
  CHECK(v.metadata.at("family") == "A");
  CHECK(v.metadata.at("seed") == "42");

  fs::resize_file(path, fs::file_size(path) - 11);
  CHECK_THROWS_AS((void)sim::read_volume(path), FormatError);
  try {
    (void)sim::read_volume(path);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
}

TEST_CASE("volume round trip survives 1000 randomized fixtures") {
  Rng rng(52);
  const fs::path dir = tmp_dir();
  const std::string path = (dir / "many.umrik").string();
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    MultiCoilKSpaceT<float> k(1 + static_cast<int>(rng.uniform(0, 3)),
                              2 + static_cast<int>(rng.uniform(0, 6)),
                              2 + static_cast<int>(rng.uniform(0, 6)));
    for (auto& z : k.data)
      z = {static_cast<float>(rng.uniform(-10, 10)), static_cast<float>(rng.uniform(-10, 10))};
    sim::write_volume(path, k, {});
    const auto v = sim::read_volume(path);
    if (v.kspace.coils != k.coils || v.kspace.height != k.height || v.kspace.width != k.width ||
        std::memcmp(v.kspace.data.data(), k.data.data(),
                    k.data.size() * sizeof(std::complex<float>)) != 0)
      ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("externally written volume layout loads with the right coil count") {
  // write the documented byte layout by hand, as a converter script would
  const fs::path dir = tmp_dir();
  const std::string path = (dir / "external.umrik").string();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write("UMRIK1", 6);
    const std::uint32_t dims[3] = {2, 4, 4};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const std::uint8_t dtype = 0;
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    std::vector<float> samples(2 * 4 * 4 * 2);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<float>(i);
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size() * sizeof(float)));
    const std::string meta = "family=B\nseed=7\nnoise_std=0\n";
    const std::uint32_t len = static_cast<std::uint32_t>(meta.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(meta.data(), len);
  }
  const auto v = sim::read_volume(path);
  CHECK(v.kspace.coils == 2);
  CHECK(v.kspace.height == 4);
  CHECK(v.kspace.width == 4);
  CHECK(v.kspace.coil(0)[0] == std::complex<float>(0.0f, 1.0f));  // interleaved re/im
  CHECK(v.metadata.at("family") == "B");
}

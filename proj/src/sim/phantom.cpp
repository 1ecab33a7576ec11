#include "umri/sim/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "umri/core/fft.hpp"
#include "umri/core/rng.hpp"
#include "umri/mri/physics.hpp"

namespace umri::sim {

PhantomFamily family_from_string(const std::string& s) {
  if (s == "A" || s == "a") return PhantomFamily::A;
  if (s == "B" || s == "b") return PhantomFamily::B;
  if (s == "C" || s == "c") return PhantomFamily::C;
  throw ConfigError("unknown phantom family '" + s + "' (expected A, B or C)");
}

std::string family_to_string(PhantomFamily f) {
  switch (f) {
    case PhantomFamily::A: return "A";
    case PhantomFamily::B: return "B";
    case PhantomFamily::C: return "C";
  }
  throw ConfigError("invalid phantom family value");
}

namespace {

struct Ellipse {
  double cx, cy, a, b, angle, value;  // value is added inside the ellipse
};

double ellipse_field(const std::vector<Ellipse>& parts, double x, double y) {
  double v = 0.0;
  for (const auto& e : parts) {
    const double dx = x - e.cx;
    const double dy = y - e.cy;
    const double ca = std::cos(e.angle), sa = std::sin(e.angle);
    const double u = (dx * ca + dy * sa) / e.a;
    const double w = (-dx * sa + dy * ca) / e.b;
    if (u * u + w * w <= 1.0) v += e.value;
  }
  return v;
}

std::vector<Ellipse> family_a_parts(Rng& rng) {
  auto j = [&](double v, double amp) { return v * (1.0 + rng.uniform(-amp, amp)); };
  std::vector<Ellipse> parts;
  // torso
  parts.push_back({0.0, 0.0, j(0.88, 0.05), j(0.72, 0.05), rng.uniform(-0.1, 0.1), 0.32});
  // heart body
  const double hx = rng.uniform(-0.25, -0.05), hy = rng.uniform(0.0, 0.18);
  parts.push_back({hx, hy, j(0.42, 0.08), j(0.36, 0.08), rng.uniform(-0.3, 0.3), 0.22});
  // annular chamber: outer ring positive, inner cancels back, pool bright
  const double r_out = j(0.26, 0.08), r_in = r_out * j(0.62, 0.06);
  parts.push_back({hx, hy, r_out, r_out * 0.92, 0.0, 0.18});
  parts.push_back({hx, hy, r_in, r_in * 0.92, 0.0, -0.18});
  parts.push_back({hx, hy, r_in * 0.8, r_in * 0.74, 0.0, 0.30});
  // small satellite structures
  const int extras = 2 + static_cast<int>(rng.uniform(0.0, 2.0));
  for (int i = 0; i < extras; ++i) {
    parts.push_back({rng.uniform(0.15, 0.55), rng.uniform(-0.45, 0.35), j(0.09, 0.3), j(0.07, 0.3),
                     rng.uniform(0.0, 3.14), rng.uniform(0.1, 0.25)});
  }
  return parts;
}

struct BandsConfig {
  double theta;
  std::vector<double> edges;   // ascending band boundaries in projected coordinate
  std::vector<double> values;  // edges.size()+1 band intensities
  double wedge_x0, wedge_y0, wedge_angle, wedge_spread, wedge_r, wedge_value;
  double mask_a, mask_b;
};

BandsConfig family_b_config(Rng& rng) {
  BandsConfig cfg;
  cfg.theta = rng.uniform(0.25, 0.75);  // oblique band direction
  const int bands = 6 + static_cast<int>(rng.uniform(0.0, 3.0));
  double s = -0.9;
  for (int i = 0; i < bands; ++i) {
    s += rng.uniform(0.12, 0.32);
    if (s > 0.95) break;
    cfg.edges.push_back(s);
  }
  cfg.values.push_back(rng.uniform(0.15, 0.4));
  for (std::size_t i = 0; i < cfg.edges.size(); ++i) {
    double v = cfg.values.back() + rng.uniform(0.18, 0.45) * (i % 2 ? 1.0 : -1.0);
    cfg.values.push_back(std::clamp(v, 0.1, 0.85));
  }
  cfg.wedge_x0 = rng.uniform(-0.3, 0.1);
  cfg.wedge_y0 = rng.uniform(-0.2, 0.2);
  cfg.wedge_angle = rng.uniform(0.0, 6.28);
  cfg.wedge_spread = rng.uniform(0.3, 0.55);
  cfg.wedge_r = rng.uniform(0.35, 0.6);
  cfg.wedge_value = rng.uniform(0.25, 0.4);
  cfg.mask_a = rng.uniform(0.8, 0.92);
  cfg.mask_b = rng.uniform(0.68, 0.85);
  return cfg;
}

double bands_field(const BandsConfig& cfg, double x, double y) {
  const double mx = x / cfg.mask_a, my = y / cfg.mask_b;
  if (mx * mx + my * my > 1.0) return 0.0;
  const double s = x * std::cos(cfg.theta) + y * std::sin(cfg.theta);
  std::size_t band = 0;
  while (band < cfg.edges.size() && s > cfg.edges[band]) ++band;
  double v = cfg.values[band];
  // wedge sector
  const double dx = x - cfg.wedge_x0, dy = y - cfg.wedge_y0;
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r < cfg.wedge_r) {
    double ang = std::atan2(dy, dx) - cfg.wedge_angle;
    while (ang > 3.14159265358979) ang -= 2 * 3.14159265358979;
    while (ang < -3.14159265358979) ang += 2 * 3.14159265358979;
    if (std::abs(ang) < cfg.wedge_spread) v += cfg.wedge_value;
  }
  return v;
}

struct ShellsConfig {
  std::vector<double> radii;   // descending shell boundaries
  std::vector<double> values;  // intensity inside each annulus
  double ecc;
  struct Blob {
    double cx, cy, sigma, amp;
  };
  std::vector<Blob> blobs;
};

ShellsConfig family_c_config(Rng& rng) {
  ShellsConfig cfg;
  cfg.ecc = rng.uniform(0.82, 0.98);
  double r = rng.uniform(0.82, 0.92);
  const int shells = 3 + static_cast<int>(rng.uniform(0.0, 2.0));
  for (int i = 0; i < shells; ++i) {
    cfg.radii.push_back(r);
    r -= rng.uniform(0.05, 0.14);
  }
  cfg.values = {0.9, 0.2, 0.55};
  for (int i = 3; i < shells; ++i) cfg.values.push_back(rng.uniform(0.35, 0.6));
  const int blobs = 3 + static_cast<int>(rng.uniform(0.0, 3.0));
  for (int i = 0; i < blobs; ++i)
    cfg.blobs.push_back({rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(0.05, 0.16),
                         rng.uniform(-0.22, 0.28)});
  return cfg;
}

double shells_field(const ShellsConfig& cfg, double x, double y) {
  const double r = std::sqrt(x * x + (y / cfg.ecc) * (y / cfg.ecc));
  if (r > cfg.radii.front()) return 0.0;
  double v = 0.0;
  for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
    if (r <= cfg.radii[i]) v = cfg.values[std::min(i, cfg.values.size() - 1)];
  }
  for (const auto& b : cfg.blobs) {
    const double dx = x - b.cx, dy = y - b.cy;
    v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
  }
  return v;
}

}  // namespace

template <typename T>
ComplexImageT<T> generate_phantom(const PhantomSpec& spec) {
  if (spec.size < 8) throw ConfigError("phantom: size must be at least 8");
  Rng rng(derive_seed(spec.seed, "phantom/" + family_to_string(spec.family)));

  std::vector<Ellipse> parts_a;
  BandsConfig cfg_b;
  ShellsConfig cfg_c;
  switch (spec.family) {
    case PhantomFamily::A: parts_a = family_a_parts(rng); break;
    case PhantomFamily::B: cfg_b = family_b_config(rng); break;
    case PhantomFamily::C: cfg_c = family_c_config(rng); break;
  }

  // low-order polynomial phase with bounded gradient
  double pc[6];
  pc[0] = rng.uniform(-3.0, 3.0);
  for (int i = 1; i < 3; ++i) pc[i] = rng.uniform(-1.2, 1.2);
  for (int i = 3; i < 6; ++i) pc[i] = rng.uniform(-0.6, 0.6);

  const int s = spec.size;
  ComplexImageT<T> img(s, s);
  for (int r = 0; r < s; ++r) {
    const double y = (2.0 * r - s + 1) / s;
    for (int c = 0; c < s; ++c) {
      const double x = (2.0 * c - s + 1) / s;
      double m = 0.0;
      switch (spec.family) {
        case PhantomFamily::A: m = ellipse_field(parts_a, x, y); break;
        case PhantomFamily::B: m = bands_field(cfg_b, x, y); break;
        case PhantomFamily::C: m = shells_field(cfg_c, x, y); break;
      }
      m = std::clamp(m, 0.0, 1.0);
      const double phase = pc[0] + pc[1] * x + pc[2] * y + pc[3] * x * x + pc[4] * x * y +
                           pc[5] * y * y;
      img.at(r, c) = std::complex<T>(static_cast<T>(m * std::cos(phase)),
                                     static_cast<T>(m * std::sin(phase)));
    }
  }
  return img;
}

template <typename T>
SensitivityMapsT<T> simulate_coils(int n, int size) {
  if (n < 1) throw ConfigError("coils: need at least one coil");
  if (size < 2) throw ConfigError("coils: size too small");
  SensitivityMapsT<T> sens(n, size, size);
  const double radius = 1.25;
  const double sigma = 1.05;
  std::vector<double> rss(static_cast<std::size_t>(size) * size, 0.0);
  std::vector<std::complex<double>> raw(static_cast<std::size_t>(n) * size * size);

  for (int i = 0; i < n; ++i) {
    // fixed geometry per (n, size): centers spread around the border
    const double ang = 2.0 * 3.14159265358979323846 * i / n + 0.37;
    const double cx = radius * std::cos(ang);
    const double cy = radius * std::sin(ang);
    const double pa = 0.6 * std::cos(ang * 1.7 + 1.1);
    const double pb = 0.6 * std::sin(ang * 2.3 + 0.4);
    for (int r = 0; r < size; ++r) {
      const double y = (2.0 * r - size + 1) / size;
      for (int c = 0; c < size; ++c) {
        const double x = (2.0 * c - size + 1) / size;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
        const double ph = pa * x + pb * y + 0.2 * ang;
        const std::size_t p = static_cast<std::size_t>(r) * size + c;
        raw[static_cast<std::size_t>(i) * size * size + p] =
            std::polar(mag, ph);
        rss[p] += mag * mag;
      }
    }
  }
  for (auto& v : rss) v = std::sqrt(v);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int i = 0; i < n; ++i)
    for (std::size_t p = 0; p < plane; ++p) {
      const std::complex<double> v =
          rss[p] > 1e-8 ? raw[static_cast<std::size_t>(i) * plane + p] / rss[p]
                        : std::complex<double>(0.0, 0.0);
      sens.coil(i)[p] = std::complex<T>(static_cast<T>(v.real()), static_cast<T>(v.imag()));
    }
  return sens;
}

template <typename T>
MultiCoilKSpaceT<T> synthesize_kspace(const ComplexImageT<T>& image,
                                      const SensitivityMapsT<T>& sens, double noise_std,
                                      std::uint64_t seed) {
  if (noise_std < 0.0) throw ConfigError("synthesize: negative noise_std");
  CoilImagesT<T> coils = mri::expand(image, sens);
  for (int i = 0; i < coils.coils; ++i)
    fft::fft2c(coils.coil(i), coils.coil(i), coils.height, coils.width);
  if (noise_std > 0.0) {
    Rng rng(derive_seed(seed, "kspace-noise"));
    for (auto& z : coils.data)
      z += std::complex<T>(static_cast<T>(rng.normal(0.0, noise_std)),
                           static_cast<T>(rng.normal(0.0, noise_std)));
  }
  return coils;
}

#define UMRI_INSTANTIATE_PHANTOM(T)                                                       \
  template ComplexImageT<T> generate_phantom<T>(const PhantomSpec&);                      \
  template SensitivityMapsT<T> simulate_coils<T>(int, int);                               \
  template MultiCoilKSpaceT<T> synthesize_kspace<T>(const ComplexImageT<T>&,              \
                                                    const SensitivityMapsT<T>&, double,   \
                                                    std::uint64_t);

UMRI_INSTANTIATE_PHANTOM(float)
UMRI_INSTANTIATE_PHANTOM(double)

#undef UMRI_INSTANTIATE_PHANTOM

}  // namespace umri::sim

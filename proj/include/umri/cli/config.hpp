#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "umri/recon/train.hpp"
#include "umri/sim/dataset.hpp"

namespace umri::cli {

// Line-oriented key=value configuration with [section] headers and full-line
// '#' comments. Environment variables of the form UMRI__SECTION__KEY override
// file values. dump() reproduces the effective configuration.
class IniConfig {
 public:
  static IniConfig parse_file(const std::string& path);
  static IniConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;

  void apply_env_overrides();  // UMRI__SECTION__KEY=value
  std::string dump() const;

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> items;
  };
  std::vector<Section> sections_;
  Section* find(const std::string& name);
  const Section* find(const std::string& name) const;
};

struct EvalCell {
  sim::PhantomFamily family = sim::PhantomFamily::A;
  int acceleration = 4;
  AcsSpec acs;
};

// Fully resolved run configuration; validated on construction.
struct RunConfig {
  IniConfig raw;

  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  int threads = 0;           // 0 keeps the OpenMP default
  bool deterministic = true; // false additionally parallelizes across samples

  std::string dataset_dir = "data/desk";
  int image_size = 64;
  int coils = 4;
  double noise_std = 0.005;
  std::map<sim::PhantomFamily, int> counts;
  std::array<double, 3> fractions{0.625, 0.125, 0.25};
  sim::PhantomFamily train_family = sim::PhantomFamily::A;

  int acceleration = 4;
  AcsSpec acs = AcsSpec::acs_lines(8);

  recon::ModelConfig model;
  recon::TrainSchedule schedule;
  std::string encoder_weights;  // optional converted pretrained encoder import

  std::vector<EvalCell> eval_cells;

  static RunConfig defaults();
  static RunConfig from_ini(IniConfig ini);
  static RunConfig load(const std::string& path, bool apply_env = true);

  void validate() const;
  // effective configuration, written verbatim into every output directory
  std::string dump() const { return raw.dump(); }
};

AcsSpec parse_acs_spec(const std::string& text);    // "acs:8" or "cf:0.08"
std::string acs_spec_to_string(const AcsSpec& acs);

}  // namespace umri::cli

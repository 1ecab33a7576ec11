// umri command-line interface: dataset generation, training, reconstruction,
// evaluation sweeps and mask inspection.
#include <CLI11.hpp>

#include <iostream>

#include "umri/cli/commands.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 runtime error, 4 I/O error
int guarded(const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const umri::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const umri::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const umri::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unrolled multi-coil MRI reconstruction at desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  std::string resume;
  std::string checkpoint;
  std::string volume;
  std::string out_base;

  auto* gen = app.add_subcommand("gen-data", "generate the phantom dataset");
  gen->add_option("-c,--config", config_path, "run configuration file")->required();

  auto* train = app.add_subcommand("train", "train a reconstruction model");
  train->add_option("-c,--config", config_path, "run configuration file")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");

  auto* rec = app.add_subcommand("reconstruct", "reconstruct one k-space volume");
  rec->add_option("-c,--config", config_path, "run configuration file")->required();
  rec->add_option("--checkpoint", checkpoint, "trained weight file")->required();
  rec->add_option("--volume", volume, "input k-space volume (.umrik)")->required();
  rec->add_option("-o,--out", out_base, "output base path (writes .pgm and .f32)")->required();

  auto* eval = app.add_subcommand("eval", "run the evaluation grid");
  eval->add_option("-c,--config", config_path, "run configuration file")->required();
  eval->add_option("--checkpoint", checkpoint, "trained weight file")->required();

  int width = 0;
  int accel = 0;
  int acs_lines = -1;
  double center_fraction = -1.0;
  std::string mask_out;
  auto* maskgen = app.add_subcommand("maskgen", "build an equispaced sampling mask");
  maskgen->add_option("--width", width, "phase-encode width")->required();
  maskgen->add_option("--r", accel, "acceleration factor")->required();
  maskgen->add_option("--acs-lines", acs_lines, "fully sampled center lines");
  maskgen->add_option("--center-fraction", center_fraction, "fully sampled center fraction");
  maskgen->add_option("-o,--out", mask_out, "mask file to write");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed())
    return guarded([&] { umri::cli::run_gen_data(umri::cli::RunConfig::load(config_path)); });
  if (train->parsed())
    return guarded([&] { umri::cli::run_train(umri::cli::RunConfig::load(config_path), resume); });
  if (rec->parsed())
    return guarded([&] {
      umri::cli::run_reconstruct(umri::cli::RunConfig::load(config_path),
                                 {checkpoint, volume, out_base});
    });
  if (eval->parsed())
    return guarded(
        [&] { umri::cli::run_eval(umri::cli::RunConfig::load(config_path), checkpoint); });
  if (maskgen->parsed())
    return guarded([&] {
      if ((acs_lines >= 0) == (center_fraction >= 0.0))
        throw umri::ConfigError("maskgen: give exactly one of --acs-lines or --center-fraction");
      const umri::AcsSpec acs = acs_lines >= 0 ? umri::AcsSpec::acs_lines(acs_lines)
                                               : umri::AcsSpec::center_fraction(center_fraction);
      umri::cli::run_maskgen(width, accel, acs, mask_out);
    });
  return 2;
}

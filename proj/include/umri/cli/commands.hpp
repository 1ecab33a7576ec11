#pragma once

#include "umri/cli/config.hpp"

namespace umri::cli {

// Applies [run] threads to the OpenMP runtime.
void set_threads(const RunConfig& cfg);

// Generates the phantom dataset (manifest + k-space volumes) under
// [dataset] dir and copies the effective config next to it.
void run_gen_data(const RunConfig& cfg);

// Trains per [model]/[schedule] on the train split, logging one CSV row per
// epoch and checkpointing last/best weights under [run] out_dir. A nonempty
// `resume` path continues from that checkpoint.
void run_train(const RunConfig& cfg, const std::string& resume);

struct ReconstructArgs {
  std::string checkpoint;
  std::string volume;
  std::string out_base;  // writes <out_base>.pgm and <out_base>.f32
};

// Reconstructs one volume with the [mask] settings and prints the metric
// line against the fully sampled target.
void run_reconstruct(const RunConfig& cfg, const ReconstructArgs& args);

// Evaluates the checkpoint over the [eval] grid against the dataset's test
// split; writes results.csv (per-sample, per-cell aggregate and zero-filled
// baseline rows) under [run] out_dir.
void run_eval(const RunConfig& cfg, const std::string& checkpoint);

// Writes the mask file and prints the sampled columns and net acceleration.
void run_maskgen(int width, int acceleration, const AcsSpec& acs, const std::string& out_file);

// Loads checkpoint values into an initialized model; shapes must agree.
template <typename T>
void load_into_model(recon::ReconModel<T>& model, const std::string& checkpoint);

}  // namespace umri::cli

#pragma once

#include <functional>

#include "umri/recon/cascade.hpp"

namespace umri::recon {

struct TrainSchedule {
  double lr = 1e-3;
  int epochs = 50;
  int decay_epoch = 40;  // epochs after this one run at lr * 0.1
  int patience = 5;      // early stop after this many non-improving val epochs
  std::uint64_t seed = 1;
};

template <typename T>
struct TrainSample {
  std::string id;
  MultiCoilKSpaceT<T> full_kspace;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_ssim = 0.0;
  double lr = 0.0;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double best_val_ssim = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  bool early_stopped = false;
};

template <typename T>
using EpochCallback = std::function<void(const EpochLog&, const ReconModel<T>&)>;

// SSIM-loss training with per-sample Adam steps, step decay and early
// stopping. Epoch counters, the best validation value and the Adam moments
// live in the model's weight container, so training resumes exactly from a
// saved checkpoint. Aborts with DataError if the loss turns non-finite.
template <typename T>
TrainResult train_model(ReconModel<T>& model, const std::vector<TrainSample<T>>& train_set,
                        const std::vector<TrainSample<T>>& val_set, const SamplingMask& mask,
                        const TrainSchedule& schedule, const EpochCallback<T>& on_epoch = {});

// forward-only mean SSIM of the model's reconstructions over a sample set
template <typename T>
double evaluate_ssim(const ReconModel<T>& model, const std::vector<TrainSample<T>>& set,
                     const SamplingMask& mask);

// forward-only mean SSIM loss (1 - SSIM), the training objective
template <typename T>
double evaluate_loss(const ReconModel<T>& model, const std::vector<TrainSample<T>>& set,
                     const SamplingMask& mask);

// target magnitude (RSS of the fully sampled data) and its max value
template <typename T>
std::pair<std::vector<double>, double> training_target(const MultiCoilKSpaceT<T>& full_kspace);

}  // namespace umri::recon

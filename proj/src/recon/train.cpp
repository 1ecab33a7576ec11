#include "umri/recon/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "umri/core/rng.hpp"
#include "umri/metrics/metrics.hpp"
#include "umri/mri/physics.hpp"
#include "umri/nn/adam.hpp"
#include "umri/nn/ops.hpp"

namespace umri::recon {

namespace {

const std::string kEpochPath = std::string(kStatePrefix) + "train_epoch";
const std::string kBestPath = std::string(kStatePrefix) + "train_best_val";
const std::string kSincePath = std::string(kStatePrefix) + "train_since_improve";

template <typename T>
struct Prepared {
  Tensor<T> masked;
  Tensor<T> target_t;
  std::vector<double> target;
  double data_range = 0.0;
};

template <typename T>
Prepared<T> prepare(const TrainSample<T>& sample, const SamplingMask& mask) {
  Prepared<T> p;
  p.masked = kspace_to_tensor(mri::apply_mask(sample.full_kspace, mask));
  auto [target, range] = training_target(sample.full_kspace);
  p.target = std::move(target);
  p.data_range = range;
  std::vector<T> tt(p.target.size());
  for (std::size_t i = 0; i < tt.size(); ++i) tt[i] = static_cast<T>(p.target[i]);
  p.target_t =
      Tensor<T>::constant({sample.full_kspace.height, sample.full_kspace.width}, std::move(tt));
  return p;
}

template <typename T>
double state_value(const ModelWeights<T>& w, const std::string& path, double fallback) {
  if (!w.has(path)) return fallback;
  return static_cast<double>(w.get(path).value()[0]);
}

template <typename T>
void set_state(ModelWeights<T>& w, const std::string& path, double v) {
  if (!w.has(path)) {
    w.add(path, {1}, {static_cast<T>(v)}, true);
  } else {
    w.get(path).value_mut()[0] = static_cast<T>(v);
  }
}

}  // namespace

template <typename T>
std::pair<std::vector<double>, double> training_target(const MultiCoilKSpaceT<T>& full_kspace) {
  const std::vector<T> mag = mri::zero_filled_rss(full_kspace);
  std::vector<double> target(mag.begin(), mag.end());
  double range = 0.0;
  for (double v : target) range = std::max(range, v);
  if (range <= 0.0) throw DataError("training target is identically zero");
  return {std::move(target), range};
}

template <typename T>
TrainResult train_model(ReconModel<T>& model, const std::vector<TrainSample<T>>& train_set,
                        const std::vector<TrainSample<T>>& val_set, const SamplingMask& mask,
                        const TrainSchedule& schedule, const EpochCallback<T>& on_epoch) {
  if (train_set.empty() || val_set.empty())
    throw ConfigError("train: train and validation sets must be nonempty");
  if (schedule.epochs < 1) throw ConfigError("train: epoch count must be positive");
  if (schedule.patience < 1) throw ConfigError("train: patience must be positive");

  std::vector<Prepared<T>> train_prep, val_prep;
  train_prep.reserve(train_set.size());
  for (const auto& s : train_set) train_prep.push_back(prepare(s, mask));
  val_prep.reserve(val_set.size());
  for (const auto& s : val_set) val_prep.push_back(prepare(s, mask));

  TrainResult result;
  const int start_epoch = static_cast<int>(state_value(model.weights, kEpochPath, 0.0)) + 1;
  double best = state_value(model.weights, kBestPath, -1.0);
  int since_improve = static_cast<int>(state_value(model.weights, kSincePath, 0.0));
  result.best_val_ssim = best;

  AdamConfig adam;
  adam.lr = schedule.lr;

  for (int epoch = start_epoch; epoch <= schedule.epochs; ++epoch) {
    const double lr = epoch > schedule.decay_epoch ? schedule.lr * 0.1 : schedule.lr;
    adam.lr = lr;

    std::vector<std::size_t> order(train_prep.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(schedule.seed, "epoch-order", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const Prepared<T>& p = train_prep[idx];
      Tensor<T> recon = model.reconstruct_graph(p.masked, mask);
      Tensor<T> loss = metrics::ssim_loss(recon, p.target_t, p.data_range);
      const double lv = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(lv))
        throw DataError("train: non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                        train_set[idx].id);
      loss_sum += lv;
      GradMap<T> grads = backward(loss);
      adam_step(model.weights, name_gradients(model.weights, grads), adam);
    }

    double val_sum = 0.0;
    for (std::size_t i = 0; i < val_prep.size(); ++i) {
      const Prepared<T>& p = val_prep[i];
      Tensor<T> recon = model.reconstruct_graph(p.masked, mask);
      std::vector<double> rec(recon.value().begin(), recon.value().end());
      val_sum += metrics::ssim(rec, p.target, recon.dim(0), recon.dim(1), p.data_range);
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train_prep.size());
    row.val_ssim = val_sum / static_cast<double>(val_prep.size());
    row.lr = lr;
    row.improved = row.val_ssim > best;
    if (row.improved) {
      best = row.val_ssim;
      since_improve = 0;
      result.best_epoch = epoch;
    } else {
      ++since_improve;
    }
    result.best_val_ssim = best;
    result.log.push_back(row);
    result.epochs_run = epoch;

    set_state(model.weights, kEpochPath, epoch);
    set_state(model.weights, kBestPath, best);
    set_state(model.weights, kSincePath, since_improve);
    if (on_epoch) on_epoch(row, model);

    if (since_improve >= schedule.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

template <typename T>
double evaluate_ssim(const ReconModel<T>& model, const std::vector<TrainSample<T>>& set,
                     const SamplingMask& mask) {
  if (set.empty()) throw ConfigError("evaluate: empty sample set");
  double sum = 0.0;
  for (const auto& s : set) {
    Prepared<T> p = prepare(s, mask);
    Tensor<T> recon = model.reconstruct_graph(p.masked, mask);
    std::vector<double> rec(recon.value().begin(), recon.value().end());
    sum += metrics::ssim(rec, p.target, recon.dim(0), recon.dim(1), p.data_range);
  }
  return sum / static_cast<double>(set.size());
}

template <typename T>
double evaluate_loss(const ReconModel<T>& model, const std::vector<TrainSample<T>>& set,
                     const SamplingMask& mask) {
  if (set.empty()) throw ConfigError("evaluate: empty sample set");
  double sum = 0.0;
  for (const auto& s : set) {
    Prepared<T> p = prepare(s, mask);
    Tensor<T> recon = model.reconstruct_graph(p.masked, mask);
    Tensor<T> loss = metrics::ssim_loss(recon, p.target_t, p.data_range);
    sum += static_cast<double>(loss.value()[0]);
  }
  return sum / static_cast<double>(set.size());
}

#define UMRI_INSTANTIATE_TRAIN(T)                                                              \
  template std::pair<std::vector<double>, double> training_target<T>(const MultiCoilKSpaceT<T>&); \
  template TrainResult train_model<T>(ReconModel<T>&, const std::vector<TrainSample<T>>&,      \
                                      const std::vector<TrainSample<T>>&, const SamplingMask&, \
                                      const TrainSchedule&, const EpochCallback<T>&);          \
  template double evaluate_ssim<T>(const ReconModel<T>&, const std::vector<TrainSample<T>>&,   \
                                   const SamplingMask&);                                       \
  template double evaluate_loss<T>(const ReconModel<T>&, const std::vector<TrainSample<T>>&,   \
                                   const SamplingMask&);

UMRI_INSTANTIATE_TRAIN(float)
UMRI_INSTANTIATE_TRAIN(double)

#undef UMRI_INSTANTIATE_TRAIN

}  // namespace umri::recon

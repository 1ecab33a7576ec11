#include "umri/cli/commands.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "umri/metrics/metrics.hpp"
#include "umri/mri/physics.hpp"
#include "umri/nn/weights.hpp"

namespace fs = std::filesystem;

namespace umri::cli {

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double capped_psnr(double v) { return std::isinf(v) ? metrics::kPsnrCap : v; }

// ".incomplete" marker dropped while an output location is being written
class OutputGuard {
 public:
  explicit OutputGuard(const fs::path& marker) : marker_(marker) {
    std::ofstream m(marker_);
    if (!m) throw IoError("cannot create marker " + marker_.string());
  }
  void complete() {
    fs::remove(marker_);
    done_ = true;
  }
  ~OutputGuard() {
    // leave the marker behind on failure
    (void)done_;
  }

 private:
  fs::path marker_;
  bool done_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

struct LoadedSet {
  std::vector<recon::TrainSample<float>> samples;
};

LoadedSet load_split(const RunConfig& cfg, const sim::DatasetManifest& manifest,
                     sim::PhantomFamily family, sim::Split split) {
  LoadedSet set;
  for (const auto* e : manifest.select(family, split)) {
    sim::Volume v = sim::read_volume((fs::path(cfg.dataset_dir) / e->file).string());
    set.samples.push_back({e->id, std::move(v.kspace)});
  }
  return set;
}

recon::ReconModel<float> make_model(const RunConfig& cfg) {
  recon::ReconModel<float> model;
  model.cfg = cfg.model;
  if (!cfg.encoder_weights.empty()) {
    // converted pretrained encoder import: pre-populate frozen encoder paths
    ModelWeights<float> imported = load_weights<float>(cfg.encoder_weights);
    for (const auto& [path, entry] : imported.entries()) {
      if (path.rfind("encoder/", 0) != 0)
        throw ConfigError("encoder weight file contains non-encoder path " + path);
      model.weights.add(path, entry.tensor.shape(), entry.tensor.value(), true);
    }
  }
  model.init(cfg.seed);
  return model;
}

void write_pgm16(const fs::path& path, const std::vector<float>& img, int h, int w) {
  double mx = 0.0;
  for (float v : img) mx = std::max(mx, static_cast<double>(v));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << w << " " << h << "\n65535\n";
  for (float v : img) {
    const double s = mx > 0.0 ? static_cast<double>(v) / mx : 0.0;
    const unsigned u = static_cast<unsigned>(std::lround(s * 65535.0));
    // PGM stores 16-bit samples big-endian
    const unsigned char bytes[2] = {static_cast<unsigned char>(u >> 8),
                                    static_cast<unsigned char>(u & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_f32(const fs::path& path, const std::vector<float>& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size() * sizeof(float)));
  if (!out) throw IoError("write failed for " + path.string());
}

metrics::MetricSample score(const std::vector<float>& recon, const std::vector<double>& target,
                            int h, int w, double data_range) {
  std::vector<double> rec(recon.begin(), recon.end());
  metrics::MetricSample s;
  s.ssim = metrics::ssim(rec, target, h, w, data_range);
  s.psnr = metrics::psnr(rec, target, data_range);
  s.nmse = metrics::nmse(rec, target);
  return s;
}

}  // namespace

void set_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

void run_gen_data(const RunConfig& cfg) {
  set_threads(cfg);
  const fs::path dir(cfg.dataset_dir);
  fs::create_directories(dir / "volumes");
  OutputGuard guard(dir / ".incomplete");

  sim::DatasetManifest manifest = sim::build_manifest(cfg.counts, cfg.fractions, cfg.seed);
  const SensitivityMapsT<float> sens = sim::simulate_coils<float>(cfg.coils, cfg.image_size);

  for (const auto& e : manifest.entries) {
    sim::PhantomSpec spec{e.family, cfg.image_size, e.seed};
    const ComplexImageT<float> phantom = sim::generate_phantom<float>(spec);
    const MultiCoilKSpaceT<float> kspace =
        sim::synthesize_kspace(phantom, sens, cfg.noise_std, e.seed);
    std::map<std::string, std::string> meta{
        {"family", sim::family_to_string(e.family)},
        {"seed", std::to_string(e.seed)},
        {"noise_std", fmt_g(cfg.noise_std)},
    };
    sim::write_volume((dir / e.file).string(), kspace, meta);
  }
  sim::write_manifest(manifest, (dir / "manifest.csv").string());
  write_text(dir / "run_config.cfg", cfg.dump());
  guard.complete();
  std::cout << "gen-data: wrote " << manifest.entries.size() << " volumes to " << dir.string()
            << "\n";
}

template <typename T>
void load_into_model(recon::ReconModel<T>& model, const std::string& checkpoint) {
  ModelWeights<T> loaded = load_weights<T>(checkpoint);
  for (const auto& [path, entry] : loaded.entries()) {
    if (is_state_path(path)) {
      if (model.weights.has(path)) {
        model.weights.get(path).value_mut() = entry.tensor.value();
      } else {
        model.weights.add(path, entry.tensor.shape(), entry.tensor.value(), true);
      }
      continue;
    }
    if (!model.weights.has(path))
      throw ConfigError("checkpoint " + checkpoint + " has unexpected tensor " + path +
                        " (model variant/config mismatch?)");
    Tensor<T>& dst = model.weights.get(path);
    if (dst.shape() != entry.tensor.shape())
      throw ConfigError("checkpoint " + checkpoint + ": shape mismatch for " + path);
    dst.value_mut() = entry.tensor.value();
  }
}

void run_train(const RunConfig& cfg, const std::string& resume) {
  set_threads(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  OutputGuard guard(out / ".incomplete");
  write_text(out / "run_config.cfg", cfg.dump());

  sim::DatasetManifest manifest =
      sim::read_manifest((fs::path(cfg.dataset_dir) / "manifest.csv").string());
  LoadedSet train = load_split(cfg, manifest, cfg.train_family, sim::Split::Train);
  LoadedSet val = load_split(cfg, manifest, cfg.train_family, sim::Split::Val);
  if (train.samples.empty() || val.samples.empty())
    throw ConfigError("train: dataset has no " +
                      sim::family_to_string(cfg.train_family) + "-family train/val samples");

  recon::ReconModel<float> model = make_model(cfg);
  const bool resuming = !resume.empty();
  if (resuming) load_into_model(model, resume);

  const SamplingMask mask = mri::make_equispaced_mask(cfg.image_size, cfg.acceleration, cfg.acs);

  const fs::path log_path = out / "train_log.csv";
  const bool append_log = resuming && fs::exists(log_path);
  std::ofstream log(log_path, append_log ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open " + log_path.string());
  if (!append_log) log << "schema_version,epoch,train_loss,val_ssim,lr\n";

  recon::TrainSchedule schedule = cfg.schedule;
  schedule.seed = cfg.seed;

  const recon::EpochCallback<float> on_epoch = [&](const recon::EpochLog& row,
                                                   const recon::ReconModel<float>& m) {
    log << "1," << row.epoch << "," << fmt_g(row.train_loss) << "," << fmt_g(row.val_ssim) << ","
        << fmt_g(row.lr) << "\n";
    log.flush();
    save_weights(m.weights, (out / "ckpt_last.umriw").string());
    if (row.improved) save_weights(m.weights, (out / "ckpt_best.umriw").string());
    std::cout << "epoch " << row.epoch << " train_loss=" << row.train_loss
              << " val_ssim=" << row.val_ssim << " lr=" << row.lr << "\n";
  };

  recon::TrainResult result =
      recon::train_model(model, train.samples, val.samples, mask, schedule, on_epoch);
  write_text(out / "ckpt_best.umriw.cfg", cfg.dump());
  write_text(out / "ckpt_last.umriw.cfg", cfg.dump());
  guard.complete();
  std::cout << "train: best val SSIM " << result.best_val_ssim << " at epoch "
            << result.best_epoch << (result.early_stopped ? " (early stop)" : "") << "\n";
}

void run_reconstruct(const RunConfig& cfg, const ReconstructArgs& args) {
  set_threads(cfg);
  if (!fs::exists(args.checkpoint)) throw IoError("checkpoint not found: " + args.checkpoint);
  sim::Volume volume = sim::read_volume(args.volume);

  recon::ReconModel<float> model = make_model(cfg);
  load_into_model(model, args.checkpoint);

  const SamplingMask mask =
      mri::make_equispaced_mask(volume.kspace.width, cfg.acceleration, cfg.acs);
  const MultiCoilKSpaceT<float> masked = mri::apply_mask(volume.kspace, mask);
  const std::vector<float> recon = model.reconstruct(masked, mask);

  const fs::path base(args.out_base);
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  OutputGuard guard(fs::path(args.out_base + ".incomplete"));
  write_pgm16(fs::path(args.out_base + ".pgm"), recon, volume.kspace.height, volume.kspace.width);
  write_f32(fs::path(args.out_base + ".f32"), recon);
  guard.complete();

  auto [target, range] = recon::training_target(volume.kspace);
  const metrics::MetricSample s =
      score(recon, target, volume.kspace.height, volume.kspace.width, range);
  std::cout << "reconstruct: ssim=" << fmt_g(s.ssim) << " psnr=" << fmt_g(capped_psnr(s.psnr))
            << " nmse=" << fmt_g(s.nmse) << "\n";
}

void run_eval(const RunConfig& cfg, const std::string& checkpoint) {
  set_threads(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  OutputGuard guard(out / ".incomplete");
  write_text(out / "run_config.cfg", cfg.dump());

  sim::DatasetManifest manifest =
      sim::read_manifest((fs::path(cfg.dataset_dir) / "manifest.csv").string());
  recon::ReconModel<float> model = make_model(cfg);
  load_into_model(model, checkpoint);
  const std::string model_name = recon::variant_to_string(cfg.model.variant);

  std::ofstream csv(out / "results.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot open results.csv");
  csv << "schema_version,kind,model,family,r,acs,sample_id,ssim,psnr,nmse,"
         "ssim_std,psnr_std,nmse_std,ssim_delta_vs_baseline\n";

  for (const auto& cell : cfg.eval_cells) {
    const auto entries = manifest.select(cell.family, sim::Split::Test);
    if (entries.empty())
      throw ConfigError("eval: no test samples for family " +
                        sim::family_to_string(cell.family));
    const std::string fam = sim::family_to_string(cell.family);
    const std::string acs = acs_spec_to_string(cell.acs);

    std::vector<metrics::MetricSample> model_scores(entries.size());
    std::vector<metrics::MetricSample> baseline_scores(entries.size());

    // cells/samples produce disjoint row slots; parallel order cannot change
    // the merged output
    const int n = static_cast<int>(entries.size());
#pragma omp parallel for schedule(dynamic) if (!cfg.deterministic)
    for (int i = 0; i < n; ++i) {
      sim::Volume volume =
          sim::read_volume((fs::path(cfg.dataset_dir) / entries[i]->file).string());
      const SamplingMask mask =
          mri::make_equispaced_mask(volume.kspace.width, cell.acceleration, cell.acs);
      const MultiCoilKSpaceT<float> masked = mri::apply_mask(volume.kspace, mask);
      auto [target, range] = recon::training_target(volume.kspace);
      const std::vector<float> recon = model.reconstruct(masked, mask);
      model_scores[i] =
          score(recon, target, volume.kspace.height, volume.kspace.width, range);
      const std::vector<float> zf = mri::zero_filled_rss(masked);
      baseline_scores[i] =
          score(zf, target, volume.kspace.height, volume.kspace.width, range);
    }

    for (int i = 0; i < n; ++i) {
      const auto& s = model_scores[i];
      csv << "1,sample," << model_name << "," << fam << "," << cell.acceleration << "," << acs
          << "," << entries[i]->id << "," << fmt_g(s.ssim) << "," << fmt_g(capped_psnr(s.psnr))
          << "," << fmt_g(s.nmse) << ",,,,\n";
    }
    const metrics::MetricAggregate ma = metrics::aggregate(model_scores);
    const metrics::MetricAggregate ba = metrics::aggregate(baseline_scores);
    csv << "1,aggregate," << model_name << "," << fam << "," << cell.acceleration << "," << acs
        << ",," << fmt_g(ma.mean.ssim) << "," << fmt_g(capped_psnr(ma.mean.psnr)) << ","
        << fmt_g(ma.mean.nmse) << "," << fmt_g(ma.stddev.ssim) << "," << fmt_g(ma.stddev.psnr)
        << "," << fmt_g(ma.stddev.nmse) << "," << fmt_g(ma.mean.ssim - ba.mean.ssim) << "\n";
    csv << "1,baseline,zero-filled," << fam << "," << cell.acceleration << "," << acs << ",,"
        << fmt_g(ba.mean.ssim) << "," << fmt_g(capped_psnr(ba.mean.psnr)) << ","
        << fmt_g(ba.mean.nmse) << "," << fmt_g(ba.stddev.ssim) << "," << fmt_g(ba.stddev.psnr)
        << "," << fmt_g(ba.stddev.nmse) << ",\n";
  }
  if (!csv) throw IoError("write failed for results.csv");
  csv.close();
  guard.complete();
  std::cout << "eval: wrote " << (out / "results.csv").string() << "\n";
}

void run_maskgen(int width, int acceleration, const AcsSpec& acs, const std::string& out_file) {
  const SamplingMask mask = mri::make_equispaced_mask(width, acceleration, acs);

  std::string listing = "sampled columns:";
  for (int c = 0; c < mask.width; ++c)
    if (mask.columns[c]) listing += " " + std::to_string(c);
  std::cout << listing << "\n";
  std::cout << "sampled=" << mask.sampled_count() << " of " << mask.width
            << " net_acceleration=" << fmt_g(mask.net_acceleration()) << "\n";

  if (out_file.empty()) return;
  const fs::path path(out_file);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  OutputGuard guard(fs::path(out_file + ".incomplete"));
  std::string text = "umri-mask v1\n";
  text += "width=" + std::to_string(mask.width) + "\n";
  text += "acceleration=" + std::to_string(mask.acceleration) + "\n";
  text += "acs=" + acs_spec_to_string(mask.acs) + "\n";
  text += "acs_start=" + std::to_string(mask.acs_start) + "\n";
  text += "acs_width=" + std::to_string(mask.acs_width) + "\n";
  text += "sampled=" + std::to_string(mask.sampled_count()) + "\n";
  text += "net_acceleration=" + fmt_g(mask.net_acceleration()) + "\n";
  text += "columns=";
  for (int c = 0; c < mask.width; ++c) text += mask.columns[c] ? '1' : '0';
  text += "\n";
  write_text(path, text);
  guard.complete();
}

template void load_into_model<float>(recon::ReconModel<float>&, const std::string&);
template void load_into_model<double>(recon::ReconModel<double>&, const std::string&);

}  // namespace umri::cli

#include "umri/recon/denoiser.hpp"

#include <cmath>

#include "umri/nn/init.hpp"
#include "umri/nn/ops.hpp"

namespace umri::recon {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2i(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

}  // namespace

void DenoiserConfig::validate() const {
  encoder.validate();
  if (working_size != encoder.input_size)
    throw ConfigError("denoiser: working_size must equal the encoder input size");
  if (!is_pow2(encoder.patch_size))
    throw ConfigError("denoiser: patch size must be a power of two (stage count = log2(patch))");
  if (static_cast<int>(decoder_channels.size()) != stages())
    throw ConfigError("denoiser: expected " + std::to_string(stages()) +
                      " decoder channel entries, got " + std::to_string(decoder_channels.size()));
  for (int c : decoder_channels)
    if (c < 2) throw ConfigError("denoiser: decoder channels must be at least 2");
  int prev = kFusedLayers + 1;
  for (int s : skip_layers) {
    if (s < 1 || s > kFusedLayers)
      throw ConfigError("denoiser: skip layers index the six fused layers (1-based)");
    if (s >= prev) throw ConfigError("denoiser: skip layers must be strictly decreasing");
    if (s > encoder.num_layers) throw ConfigError("denoiser: skip layer beyond encoder depth");
    prev = s;
  }
  if (!(p_lo >= 0.0 && p_hi <= 100.0 && p_lo < p_hi))
    throw ConfigError("denoiser: percentile bounds must satisfy 0 <= lo < hi <= 100");
  for (double s : norm_std)
    if (s <= 0.0) throw ConfigError("denoiser: standardization std must be positive");
  if (input_skip_channels < 1) throw ConfigError("denoiser: input skip channels must be positive");
  if (encoder.num_layers < kFusedLayers)
    throw ConfigError("denoiser: encoder must provide at least six layers");
}

int DenoiserConfig::stages() const { return log2i(encoder.patch_size); }

DenoiserConfig DenoiserConfig::desk() { return for_encoder(VitConfig::desk()); }

DenoiserConfig DenoiserConfig::for_encoder(const VitConfig& enc) {
  DenoiserConfig cfg;
  cfg.encoder = enc;
  cfg.working_size = enc.input_size;
  cfg.decoder_channels.clear();
  const int stages = log2i(enc.patch_size);
  // taper from just under the embed width down the stages
  int ch = std::max(8, enc.embed_dim * 3 / 4);
  for (int s = 0; s < stages; ++s) {
    cfg.decoder_channels.push_back(std::max(8, ch));
    ch = ch * 2 / 3;
  }
  return cfg;
}

namespace {

template <typename T>
void add_conv(ModelWeights<T>& w, const std::string& p, int co, int ci, int k, std::uint64_t seed) {
  const std::size_t fan_in = static_cast<std::size_t>(ci) * k * k;
  w.add(p + "/weight", {co, ci, k, k},
        init::kaiming_uniform<T>(static_cast<std::size_t>(co) * ci * k * k, fan_in, seed,
                                 p + "/weight"),
        false);
  w.add(p + "/bias", {co}, init::kaiming_uniform<T>(co, fan_in, seed, p + "/bias"), false);
}

template <typename T>
void add_norm(ModelWeights<T>& w, const std::string& p, int c) {
  w.add(p + "/gamma", {c}, init::ones<T>(c), false);
  w.add(p + "/beta", {c}, init::zeros<T>(c), false);
}

int skip_channels_for(int stage_channels) { return std::max(2, stage_channels / 2); }

}  // namespace

template <typename T>
void init_denoiser_weights(ModelWeights<T>& weights, const DenoiserConfig& cfg,
                           const std::string& prefix, std::uint64_t seed) {
  cfg.validate();
  const int e = cfg.encoder.embed_dim;

  weights.add(prefix + "/fusion/logits", {DenoiserConfig::kFusedLayers},
              init::zeros<T>(DenoiserConfig::kFusedLayers), false);
  for (int i = 0; i < DenoiserConfig::kFusedLayers; ++i)
    add_norm(weights, prefix + "/fusion/ln" + std::to_string(i), e);

  int ch_in = e;
  for (int s = 0; s < cfg.stages(); ++s) {
    const std::string p = prefix + "/stage" + std::to_string(s);
    const int ch = cfg.decoder_channels[s];
    weights.add(p + "/dw/weight", {ch_in, 3, 3},
                init::kaiming_uniform<T>(static_cast<std::size_t>(ch_in) * 9, 9, seed,
                                         p + "/dw/weight"),
                false);
    weights.add(p + "/dw/bias", {ch_in}, init::kaiming_uniform<T>(ch_in, 9, seed, p + "/dw/bias"),
                false);
    add_conv(weights, p + "/pw", ch, ch_in, 1, seed);
    add_norm(weights, p + "/in1", ch);
    if (s < 3) add_conv(weights, p + "/skip", skip_channels_for(ch), e, 1, seed);
    const int refine_in = ch + (s < 3 ? skip_channels_for(ch) : 0);
    add_conv(weights, p + "/refine", ch, refine_in, 3, seed);
    add_norm(weights, p + "/in2", ch);
    ch_in = ch;
  }
  add_conv(weights, prefix + "/input_skip", cfg.input_skip_channels, 2, 3, seed);
  add_conv(weights, prefix + "/head", 2, ch_in + cfg.input_skip_channels, 3, seed);
}

template <typename T>
Tensor<T> preprocess(const Tensor<T>& image_2hw, const DenoiserConfig& cfg) {
  if (image_2hw.rank() != 3 || image_2hw.dim(0) != 2)
    throw ShapeError("preprocess: expected (2,H,W), got " + shape_str(image_2hw.shape()));
  for (const T& v : image_2hw.value())
    if (!std::isfinite(static_cast<double>(v))) throw DataError("preprocess: non-finite input");

  const int h = image_2hw.dim(1), w = image_2hw.dim(2);
  Tensor<T> mag = ops::magnitude(image_2hw);
  Tensor<T> lo = ops::percentile(mag, cfg.p_lo);
  Tensor<T> hi = ops::percentile(mag, cfg.p_hi);
  Tensor<T> scaled = ops::clip_rescale01(mag, lo, hi);
  Tensor<T> img = ops::reshape(scaled, {1, 1, h, w});
  img = ops::bilinear_resize(img, cfg.encoder.input_size, cfg.encoder.input_size);
  img = ops::replicate_chan(img, 3);
  std::vector<double> sc(3), sh(3);
  for (int c = 0; c < 3; ++c) {
    sc[c] = 1.0 / cfg.norm_std[c];
    sh[c] = -cfg.norm_mean[c] / cfg.norm_std[c];
  }
  return ops::channel_affine(img, sc, sh);
}

template <typename T>
Tensor<T> fuse_layers(const std::vector<Tensor<T>>& layer_tokens, const ModelWeights<T>& weights,
                      const std::string& prefix, const VitConfig& enc) {
  if (layer_tokens.size() != DenoiserConfig::kFusedLayers)
    throw ShapeError("fuse_layers: expected six token sets, got " +
                     std::to_string(layer_tokens.size()));
  for (const auto& t : layer_tokens)
    if (t.shape() != layer_tokens.front().shape())
      throw ShapeError("fuse_layers: token shape mismatch across layers");

  Tensor<T> w = ops::softmax_last(weights.get(prefix + "/fusion/logits"));
  Tensor<T> acc;
  for (int i = 0; i < DenoiserConfig::kFusedLayers; ++i) {
    const std::string ln = prefix + "/fusion/ln" + std::to_string(i);
    Tensor<T> normed = ops::layer_norm(layer_tokens[i], weights.get(ln + "/gamma"),
                                       weights.get(ln + "/beta"));
    Tensor<T> weighted = ops::mul_scalar(normed, ops::slice_flat(w, i, i + 1));
    acc = i == 0 ? weighted : ops::add(acc, weighted);
  }
  return tokens_to_map(acc, enc);
}

template <typename T>
Tensor<T> decode(const Tensor<T>& fused, const std::array<Tensor<T>, 3>& skips,
                 const Tensor<T>& input_2hw, const ModelWeights<T>& weights,
                 const std::string& prefix, const DenoiserConfig& cfg) {
  if (fused.rank() != 4 || fused.dim(0) != 1 || fused.dim(1) != cfg.encoder.embed_dim)
    throw ShapeError("decode: unexpected fused map shape " + shape_str(fused.shape()));
  if (input_2hw.rank() != 3 || input_2hw.dim(0) != 2)
    throw ShapeError("decode: expected (2,H,W) input skip");
  const int h = input_2hw.dim(1), w = input_2hw.dim(2);

  Tensor<T> d = fused;
  for (int s = 0; s < cfg.stages(); ++s) {
    const std::string p = prefix + "/stage" + std::to_string(s);
    d = ops::bilinear_resize(d, d.dim(2) * 2, d.dim(3) * 2);
    d = ops::depthwise_conv(d, weights.get(p + "/dw/weight"), weights.get(p + "/dw/bias"), 1);
    d = ops::conv2d(d, weights.get(p + "/pw/weight"), weights.get(p + "/pw/bias"), 1, 0);
    d = ops::relu(ops::instance_norm(d, weights.get(p + "/in1/gamma"), weights.get(p + "/in1/beta")));
    if (s < 3) {
      Tensor<T> sk = tokens_to_map(skips[s], cfg.encoder);
      sk = ops::bilinear_resize(sk, d.dim(2), d.dim(3));
      sk = ops::conv2d(sk, weights.get(p + "/skip/weight"), weights.get(p + "/skip/bias"), 1, 0);
      d = ops::concat_chan(d, sk);
    }
    d = ops::conv2d(d, weights.get(p + "/refine/weight"), weights.get(p + "/refine/bias"), 1, 1);
    d = ops::relu(ops::instance_norm(d, weights.get(p + "/in2/gamma"), weights.get(p + "/in2/beta")));
  }

  // final-stage complex input skip
  Tensor<T> in4 = ops::reshape(input_2hw, {1, 2, h, w});
  Tensor<T> isk = ops::bilinear_resize(in4, cfg.working_size, cfg.working_size);
  isk = ops::conv2d(isk, weights.get(prefix + "/input_skip/weight"),
                    weights.get(prefix + "/input_skip/bias"), 1, 1);
  d = ops::concat_chan(d, isk);
  d = ops::conv2d(d, weights.get(prefix + "/head/weight"), weights.get(prefix + "/head/bias"), 1, 1);
  if (d.dim(2) != h || d.dim(3) != w) d = ops::bilinear_resize(d, h, w);
  Tensor<T> out = ops::reshape(d, {2, h, w});
  if (cfg.residual_output) out = ops::add(out, input_2hw);
  return out;
}

template <typename T>
Tensor<T> denoise(const Tensor<T>& image_2hw, const ModelWeights<T>& weights,
                  const std::string& encoder_prefix, const std::string& prefix,
                  const DenoiserConfig& cfg) {
  cfg.validate();
  Tensor<T> enc_in = preprocess(image_2hw, cfg);
  std::vector<Tensor<T>> layers =
      vit_encode(weights, cfg.encoder, encoder_prefix, enc_in, DenoiserConfig::kFusedLayers);
  Tensor<T> fused = fuse_layers(layers, weights, prefix, cfg.encoder);
  std::array<Tensor<T>, 3> skips;
  for (int i = 0; i < 3; ++i) skips[i] = layers[cfg.skip_layers[i] - 1];
  return decode(fused, skips, image_2hw, weights, prefix, cfg);
}

template <typename T>
void init_cnn_denoiser_weights(ModelWeights<T>& weights, const CnnDenoiserConfig& cfg,
                               const std::string& prefix, std::uint64_t seed) {
  cfg.validate();
  init_unet_weights(weights, cfg.unet, prefix + "/unet", seed);
}

template <typename T>
Tensor<T> cnn_denoise(const Tensor<T>& image_2hw, const ModelWeights<T>& weights,
                      const std::string& prefix, const CnnDenoiserConfig& cfg) {
  if (image_2hw.rank() != 3 || image_2hw.dim(0) != 2)
    throw ShapeError("cnn_denoise: expected (2,H,W)");
  const int h = image_2hw.dim(1), w = image_2hw.dim(2);
  Tensor<T> x = ops::reshape(image_2hw, {1, 2, h, w});

  // per-channel standardization, undone after the network
  std::vector<Tensor<T>> chans, means, stds;
  for (int c = 0; c < 2; ++c) {
    Tensor<T> xc = ops::slice_chan(x, c, c + 1);
    Tensor<T> mu = ops::mean_all(xc);
    Tensor<T> centered = ops::sub_scalar(xc, mu);
    Tensor<T> sigma = ops::sqrt_t(ops::add_const(ops::mean_all(ops::square(centered)), cfg.eps));
    chans.push_back(ops::div_scalar(centered, sigma));
    means.push_back(mu);
    stds.push_back(sigma);
  }
  Tensor<T> normed = ops::concat_chan(chans[0], chans[1]);
  Tensor<T> y = unet_forward(weights, cfg.unet, prefix + "/unet", normed);
  std::vector<Tensor<T>> out_chans;
  for (int c = 0; c < 2; ++c) {
    Tensor<T> yc = ops::slice_chan(y, c, c + 1);
    out_chans.push_back(ops::add_scalar(ops::mul_scalar(yc, stds[c]), means[c]));
  }
  return ops::reshape(ops::concat_chan(out_chans[0], out_chans[1]), {2, h, w});
}

#define UMRI_INSTANTIATE_DENOISER(T)                                                             \
  template void init_denoiser_weights<T>(ModelWeights<T>&, const DenoiserConfig&,                \
                                         const std::string&, std::uint64_t);                    \
  template Tensor<T> preprocess<T>(const Tensor<T>&, const DenoiserConfig&);                    \
  template Tensor<T> fuse_layers<T>(const std::vector<Tensor<T>>&, const ModelWeights<T>&,      \
                                    const std::string&, const VitConfig&);                      \
  template Tensor<T> decode<T>(const Tensor<T>&, const std::array<Tensor<T>, 3>&,               \
                               const Tensor<T>&, const ModelWeights<T>&, const std::string&,    \
                               const DenoiserConfig&);                                          \
  template Tensor<T> denoise<T>(const Tensor<T>&, const ModelWeights<T>&, const std::string&,   \
                                const std::string&, const DenoiserConfig&);                     \
  template void init_cnn_denoiser_weights<T>(ModelWeights<T>&, const CnnDenoiserConfig&,        \
                                             const std::string&, std::uint64_t);                \
  template Tensor<T> cnn_denoise<T>(const Tensor<T>&, const ModelWeights<T>&,                   \
                                    const std::string&, const CnnDenoiserConfig&);

UMRI_INSTANTIATE_DENOISER(float)
UMRI_INSTANTIATE_DENOISER(double)

#undef UMRI_INSTANTIATE_DENOISER

}  // namespace umri::recon

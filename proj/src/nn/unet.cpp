#include "umri/nn/unet.hpp"

#include "umri/nn/init.hpp"
#include "umri/nn/ops.hpp"

namespace umri {

void UnetConfig::validate() const {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("unet: channel counts must be positive");
  if (base_channels < 1) throw ConfigError("unet: base_channels must be at least 1");
  if (pools < 1) throw ConfigError("unet: pooling layer count must be at least 1");
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

// conv3x3 + IN + ReLU, twice
template <typename T>
void add_block(ModelWeights<T>& w, const std::string& p, int ci, int co, std::uint64_t seed) {
  add_conv(w, p + "/conv1", co, ci, 3, seed);
  add_norm(w, p + "/in1", co);
  add_conv(w, p + "/conv2", co, co, 3, seed);
  add_norm(w, p + "/in2", co);
}

template <typename T>
Tensor<T> block_forward(const ModelWeights<T>& w, const std::string& p, const Tensor<T>& x) {
  Tensor<T> h = ops::conv2d(x, w.get(p + "/conv1/weight"), w.get(p + "/conv1/bias"), 1, 1);
  h = ops::relu(ops::instance_norm(h, w.get(p + "/in1/gamma"), w.get(p + "/in1/beta")));
  h = ops::conv2d(h, w.get(p + "/conv2/weight"), w.get(p + "/conv2/bias"), 1, 1);
  return ops::relu(ops::instance_norm(h, w.get(p + "/in2/gamma"), w.get(p + "/in2/beta")));
}

}  // namespace

template <typename T>
void init_unet_weights(ModelWeights<T>& weights, const UnetConfig& cfg, const std::string& prefix,
                       std::uint64_t seed) {
  cfg.validate();
  int ch = cfg.in_channels;
  for (int l = 0; l < cfg.pools; ++l) {
    const int co = cfg.base_channels << l;
    add_block(weights, prefix + "/enc" + std::to_string(l), ch, co, seed);
    ch = co;
  }
  add_block(weights, prefix + "/bottleneck", ch, ch * 2, seed);
  ch *= 2;
  for (int l = cfg.pools - 1; l >= 0; --l) {
    const int co = cfg.base_channels << l;
    const std::string p = prefix + "/dec" + std::to_string(l);
    add_conv(weights, p + "/up", co, ch, 3, seed);
    add_norm(weights, p + "/in_up", co);
    add_block(weights, p, co * 2, co, seed);
    ch = co;
  }
  add_conv(weights, prefix + "/head", cfg.out_channels, ch, 1, seed);
}

template <typename T>
Tensor<T> unet_forward(const ModelWeights<T>& weights, const UnetConfig& cfg,
                       const std::string& prefix, const Tensor<T>& x) {
  cfg.validate();
  if (x.rank() != 4 || x.dim(1) != cfg.in_channels)
    throw ShapeError("unet: expected (N," + std::to_string(cfg.in_channels) + ",H,W), got " +
                     shape_str(x.shape()));
  const int mult = cfg.spatial_multiple();
  if (x.dim(2) % mult || x.dim(3) % mult)
    throw ConfigError("unet: spatial dims " + std::to_string(x.dim(2)) + "x" +
                      std::to_string(x.dim(3)) + " not divisible by " + std::to_string(mult));

  std::vector<Tensor<T>> skips;
  Tensor<T> h = x;
  for (int l = 0; l < cfg.pools; ++l) {
    h = block_forward(weights, prefix + "/enc" + std::to_string(l), h);
    skips.push_back(h);
    h = ops::avgpool2(h);
  }
  h = block_forward(weights, prefix + "/bottleneck", h);
  for (int l = cfg.pools - 1; l >= 0; --l) {
    const std::string p = prefix + "/dec" + std::to_string(l);
    h = ops::bilinear_resize(h, h.dim(2) * 2, h.dim(3) * 2);
    h = ops::conv2d(h, weights.get(p + "/up/weight"), weights.get(p + "/up/bias"), 1, 1);
    h = ops::relu(ops::instance_norm(h, weights.get(p + "/in_up/gamma"), weights.get(p + "/in_up/beta")));
    h = ops::concat_chan(skips[l], h);
    h = block_forward(weights, p, h);
  }
  return ops::conv2d(h, weights.get(prefix + "/head/weight"), weights.get(prefix + "/head/bias"), 1, 0);
}

#define UMRI_INSTANTIATE_UNET(T)                                                             \
  template void init_unet_weights<T>(ModelWeights<T>&, const UnetConfig&, const std::string&, \
                                     std::uint64_t);                                          \
  template Tensor<T> unet_forward<T>(const ModelWeights<T>&, const UnetConfig&,               \
                                     const std::string&, const Tensor<T>&);

UMRI_INSTANTIATE_UNET(float)
UMRI_INSTANTIATE_UNET(double)

#undef UMRI_INSTANTIATE_UNET

}  // namespace umri

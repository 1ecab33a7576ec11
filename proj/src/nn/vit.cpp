#include "umri/nn/vit.hpp"

#include <cmath>

#include "umri/nn/init.hpp"
#include "umri/nn/ops.hpp"

namespace umri {

void VitConfig::validate() const {
  if (input_size < 8) throw ConfigError("vit: input_size must be at least 8");
  if (patch_size < 1 || input_size % patch_size != 0)
    throw ConfigError("vit: input_size must be divisible by patch_size");
  if (num_layers < 6) throw ConfigError("vit: num_layers must be at least 6 (fusion depth)");
  if (num_heads < 1 || embed_dim % num_heads != 0)
    throw ConfigError("vit: embed_dim must be divisible by num_heads");
  if (mlp_ratio < 1) throw ConfigError("vit: mlp_ratio must be positive");
}

VitConfig VitConfig::desk() { return VitConfig{64, 8, 64, 8, 4, 4}; }

VitConfig VitConfig::vitb() { return VitConfig{224, 16, 768, 12, 12, 4}; }

VitConfig VitConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "vitb") return vitb();
  throw ConfigError("vit: unknown encoder preset '" + name + "' (expected desk or vitb)");
}

namespace {

template <typename T>
void add_frozen(ModelWeights<T>& w, const std::string& path, Shape shape, std::uint64_t seed,
                double std) {
  if (w.has(path)) return;  // already imported from a pretrained file
  const std::size_t n = shape_numel(shape);
  w.add(path, std::move(shape), init::truncated_normal<T>(n, std, seed, path), true);
}

template <typename T>
void add_frozen_const(ModelWeights<T>& w, const std::string& path, Shape shape, double v) {
  if (w.has(path)) return;
  const std::size_t n = shape_numel(shape);
  w.add(path, std::move(shape), init::constant<T>(n, v), true);
}

}  // namespace

template <typename T>
void init_vit_weights(ModelWeights<T>& weights, const VitConfig& cfg, const std::string& prefix,
                      std::uint64_t seed) {
  cfg.validate();
  const int e = cfg.embed_dim;
  const int hidden = e * cfg.mlp_ratio;
  constexpr double kStd = 0.02;

  add_frozen(weights, prefix + "/patch_embed/weight", {e, 3, cfg.patch_size, cfg.patch_size}, seed,
             kStd);
  add_frozen_const(weights, prefix + "/patch_embed/bias", {e}, 0.0);
  add_frozen(weights, prefix + "/cls_token", {1, e}, seed, kStd);
  add_frozen(weights, prefix + "/pos_embed", {cfg.tokens(), e}, seed, kStd);

  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string b = prefix + "/block" + std::to_string(l);
    add_frozen_const(weights, b + "/ln1/gamma", {e}, 1.0);
    add_frozen_const(weights, b + "/ln1/beta", {e}, 0.0);
    add_frozen(weights, b + "/attn/qkv_weight", {3 * e, e}, seed, kStd);
    add_frozen_const(weights, b + "/attn/qkv_bias", {3 * e}, 0.0);
    add_frozen(weights, b + "/attn/proj_weight", {e, e}, seed, kStd);
    add_frozen_const(weights, b + "/attn/proj_bias", {e}, 0.0);
    add_frozen_const(weights, b + "/ln2/gamma", {e}, 1.0);
    add_frozen_const(weights, b + "/ln2/beta", {e}, 0.0);
    add_frozen(weights, b + "/mlp/fc1_weight", {hidden, e}, seed, kStd);
    add_frozen_const(weights, b + "/mlp/fc1_bias", {hidden}, 0.0);
    add_frozen(weights, b + "/mlp/fc2_weight", {e, hidden}, seed, kStd);
    add_frozen_const(weights, b + "/mlp/fc2_bias", {e}, 0.0);
  }
}

template <typename T>
std::vector<Tensor<T>> vit_encode(const ModelWeights<T>& weights, const VitConfig& cfg,
                                  const std::string& prefix, const Tensor<T>& image,
                                  int up_to_layer) {
  cfg.validate();
  const int layers =
      up_to_layer >= 1 && up_to_layer <= cfg.num_layers ? up_to_layer : cfg.num_layers;
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3 ||
      image.dim(2) != cfg.input_size || image.dim(3) != cfg.input_size)
    throw ShapeError("vit_encode: expected (1,3," + std::to_string(cfg.input_size) + "," +
                     std::to_string(cfg.input_size) + "), got " + shape_str(image.shape()));

  const int e = cfg.embed_dim;
  const int grid = cfg.patch_grid();

  // patch embedding: strided conv then (E, G*G) -> (G*G, E)
  Tensor<T> patches = ops::conv2d(image, weights.get(prefix + "/patch_embed/weight"),
                                  weights.get(prefix + "/patch_embed/bias"), cfg.patch_size, 0);
  Tensor<T> tok = ops::transpose2(ops::reshape(patches, {e, grid * grid}));
  tok = ops::concat_rows(weights.get(prefix + "/cls_token"), tok);
  tok = ops::add(tok, weights.get(prefix + "/pos_embed"));

  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(e / cfg.num_heads));
  std::vector<Tensor<T>> per_layer;
  per_layer.reserve(layers);

  for (int l = 0; l < layers; ++l) {
    const std::string b = prefix + "/block" + std::to_string(l);
    // attention sublayer
    Tensor<T> x = ops::layer_norm(tok, weights.get(b + "/ln1/gamma"), weights.get(b + "/ln1/beta"));
    Tensor<T> qkv = ops::linear(x, weights.get(b + "/attn/qkv_weight"),
                                weights.get(b + "/attn/qkv_bias"));
    Tensor<T> q = ops::split_heads(ops::slice_cols(qkv, 0, e), cfg.num_heads);
    Tensor<T> k = ops::split_heads(ops::slice_cols(qkv, e, 2 * e), cfg.num_heads);
    Tensor<T> v = ops::split_heads(ops::slice_cols(qkv, 2 * e, 3 * e), cfg.num_heads);
    Tensor<T> scores = ops::scale(ops::bmm_transpose_b(q, k), attn_scale);
    Tensor<T> ctx = ops::bmm(ops::softmax_last(scores), v);
    Tensor<T> attn_out = ops::linear(ops::merge_heads(ctx), weights.get(b + "/attn/proj_weight"),
                                     weights.get(b + "/attn/proj_bias"));
    tok = ops::add(tok, attn_out);
    // mlp sublayer
    Tensor<T> y = ops::layer_norm(tok, weights.get(b + "/ln2/gamma"), weights.get(b + "/ln2/beta"));
    y = ops::linear(y, weights.get(b + "/mlp/fc1_weight"), weights.get(b + "/mlp/fc1_bias"));
    y = ops::gelu(y);
    y = ops::linear(y, weights.get(b + "/mlp/fc2_weight"), weights.get(b + "/mlp/fc2_bias"));
    tok = ops::add(tok, y);
    per_layer.push_back(tok);
  }
  return per_layer;
}

template <typename T>
Tensor<T> tokens_to_map(const Tensor<T>& tokens, const VitConfig& cfg) {
  const int grid = cfg.patch_grid();
  if (tokens.rank() != 2 || tokens.dim(0) != cfg.tokens() || tokens.dim(1) != cfg.embed_dim)
    throw ShapeError("tokens_to_map: unexpected token shape " + shape_str(tokens.shape()));
  Tensor<T> patch = ops::slice_rows(tokens, 1, tokens.dim(0));  // drop class token
  return ops::reshape(ops::transpose2(patch), {1, cfg.embed_dim, grid, grid});
}

#define UMRI_INSTANTIATE_VIT(T)                                                                  \
  template void init_vit_weights<T>(ModelWeights<T>&, const VitConfig&, const std::string&,     \
                                    std::uint64_t);                                             \
  template std::vector<Tensor<T>> vit_encode<T>(const ModelWeights<T>&, const VitConfig&,       \
                                                const std::string&, const Tensor<T>&, int);     \
  template Tensor<T> tokens_to_map<T>(const Tensor<T>&, const VitConfig&);

UMRI_INSTANTIATE_VIT(float)
UMRI_INSTANTIATE_VIT(double)

#undef UMRI_INSTANTIATE_VIT

}  // namespace umri

#pragma once

#include <cstdint>
#include <vector>

#include "umri/nn/tensor.hpp"

// Differentiable operations over Tensor<T>. Shapes are validated eagerly and
// throw ShapeError. Backward closures skip operands that do not require grad.
namespace umri::ops {

using umri::Shape;
using umri::Tensor;

// ---- elementwise ----
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, double c);
template <typename T> Tensor<T> add_const(const Tensor<T>& a, double c);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
template <typename T> Tensor<T> sqrt_t(const Tensor<T>& a);
template <typename T> Tensor<T> square(const Tensor<T>& a);

// ---- broadcast against a 1-element tensor ----
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> sub_scalar(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> div_scalar(const Tensor<T>& a, const Tensor<T>& s);

// ---- reductions ----
template <typename T> Tensor<T> sum_all(const Tensor<T>& a);
template <typename T> Tensor<T> mean_all(const Tensor<T>& a);

// ---- structure ----
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> slice_flat(const Tensor<T>& a, std::size_t i0, std::size_t i1);
template <typename T> Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, int r0, int r1);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, int c0, int c1);
template <typename T> Tensor<T> transpose2(const Tensor<T>& a);
template <typename T> Tensor<T> concat_chan(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> slice_chan(const Tensor<T>& a, int c0, int c1);
template <typename T> Tensor<T> replicate_chan(const Tensor<T>& a, int times);

// ---- attention pieces ----
template <typename T> Tensor<T> split_heads(const Tensor<T>& x, int heads);  // (T,E)->(H,T,E/H)
template <typename T> Tensor<T> merge_heads(const Tensor<T>& x);             // (H,T,d)->(T,H*d)
template <typename T> Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b);           // (B,M,K)x(B,K,N)
template <typename T> Tensor<T> bmm_transpose_b(const Tensor<T>& a, const Tensor<T>& b);  // (B,M,K)x(B,N,K)
template <typename T> Tensor<T> softmax_last(const Tensor<T>& x);

// ---- dense ----
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// y = x w^T + b with w stored (out, in)
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

// ---- normalization ----
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = 1e-5);
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        double eps = 1e-5);

// ---- conv / resize / pool (NCHW) ----
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad);
template <typename T>
Tensor<T> depthwise_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad);
template <typename T> Tensor<T> bilinear_resize(const Tensor<T>& x, int oh, int ow);
template <typename T> Tensor<T> avgpool2(const Tensor<T>& x);
// out = x * sc[c] + sh[c] with constant per-channel coefficients
template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, const std::vector<double>& sc,
                         const std::vector<double>& sh);

// ---- robust scaling ----
// linear-interpolated percentile of the flattened values, p in [0,100]
template <typename T> Tensor<T> percentile(const Tensor<T>& x, double p);
// ((clip(m,lo,hi)-lo)/(hi-lo); all-ones when hi==lo>0, all-zeros when hi==lo<=0
template <typename T>
Tensor<T> clip_rescale01(const Tensor<T>& m, const Tensor<T>& lo, const Tensor<T>& hi);

// ---- complex pairs ----
// complex arrays are shaped (..., 2, H, W): a re plane then an im plane
template <typename T> Tensor<T> magnitude(const Tensor<T>& x);        // (2,H,W)->(H,W)
template <typename T>
Tensor<T> complex_mul(const Tensor<T>& a, const Tensor<T>& b, bool conj_a, bool conj_b);
template <typename T> Tensor<T> sum_coils(const Tensor<T>& x);        // (N,2,H,W)->(2,H,W)
template <typename T> Tensor<T> rss(const Tensor<T>& x);              // (N,2,H,W)->(H,W)
template <typename T> Tensor<T> normalize_rss(const Tensor<T>& x, double support_eps);
template <typename T> Tensor<T> fft2c(const Tensor<T>& x);            // (...,2,H,W)
template <typename T> Tensor<T> ifft2c(const Tensor<T>& x);
template <typename T>
Tensor<T> mask_cols(const Tensor<T>& x, const std::vector<std::uint8_t>& mask);

}  // namespace umri::ops

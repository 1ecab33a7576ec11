#pragma once

#include <cstddef>

namespace umri::kernels {

// Raw numeric kernels on row-major buffers. The OpenMP variants below
// parallelize over disjoint output slices with per-output serial accumulation,
// so results are bitwise independent of the thread count. umri::kernels::serial
// holds plain single-threaded implementations of the forward kernels; unit
// tests assert bitwise agreement and the bench tool compares their throughput.

// out[n][oc][oh][ow], valid output size oh = (h + 2*pad - kh)/stride + 1
template <typename T>
void conv2d_forward(const T* in, int n, int ci, int h, int w, const T* weight, int co, int kh,
                    int kw, const T* bias, int stride, int pad, T* out);

template <typename T>
void conv2d_backward_input(const T* gout, int n, int co, int oh, int ow, const T* weight, int ci,
                           int kh, int kw, int h, int w, int stride, int pad, T* gin);

template <typename T>
void conv2d_backward_weight(const T* gout, int n, int co, int oh, int ow, const T* in, int ci,
                            int h, int w, int kh, int kw, int stride, int pad, T* gweight,
                            T* gbias);

// per-channel convolution, stride 1
template <typename T>
void depthwise_forward(const T* in, int n, int c, int h, int w, const T* weight, int kh, int kw,
                       const T* bias, int pad, T* out);

template <typename T>
void depthwise_backward_input(const T* gout, int n, int c, int oh, int ow, const T* weight, int kh,
                              int kw, int h, int w, int pad, T* gin);

template <typename T>
void depthwise_backward_weight(const T* gout, int n, int c, int oh, int ow, const T* in, int h,
                               int w, int kh, int kw, int pad, T* gweight, T* gbias);

// C = A (m x k) * B (k x n); optional accumulate into C
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);
// C = A^T (k x m source) * B
template <typename T>
void matmul_at(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);
// C = A * B^T (B stored n x k)
template <typename T>
void matmul_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

// align_corners=false bilinear sampling over NCHW
template <typename T>
void bilinear_forward(const T* in, int n, int c, int h, int w, int oh, int ow, T* out);

template <typename T>
void bilinear_backward(const T* gout, int n, int c, int h, int w, int oh, int ow, T* gin);

// 2x2 average pooling, even h and w
template <typename T>
void avgpool2_forward(const T* in, int n, int c, int h, int w, T* out);

template <typename T>
void avgpool2_backward(const T* gout, int n, int c, int h, int w, T* gin);

namespace serial {

template <typename T>
void conv2d_forward(const T* in, int n, int ci, int h, int w, const T* weight, int co, int kh,
                    int kw, const T* bias, int stride, int pad, T* out);

template <typename T>
void depthwise_forward(const T* in, int n, int c, int h, int w, const T* weight, int kh, int kw,
                       const T* bias, int pad, T* out);

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

template <typename T>
void bilinear_forward(const T* in, int n, int c, int h, int w, int oh, int ow, T* out);

}  // namespace serial

}  // namespace umri::kernels

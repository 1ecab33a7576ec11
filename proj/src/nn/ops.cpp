#include "umri/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "umri/core/kernels.hpp"

namespace umri::ops {

namespace {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

template <typename T>
void check_scalar(const Tensor<T>& s, const char* op) {
  if (s.numel() != 1) throw ShapeError(std::string(op) + ": expected 1-element tensor");
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

// ---------------- elementwise ----------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("add", a.shape(), std::move(v), {a, b},
      [ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (gb) {
          auto& db = sink(1);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - b.value()[i];
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("sub", a.shape(), std::move(v), {a, b},
      [ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (gb) {
          auto& db = sink(1);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        }
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("mul", a.shape(), std::move(v), {a, b},
      [a, b, ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * b.value()[i];
        }
        if (gb) {
          auto& db = sink(1);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * a.value()[i];
        }
      });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "div");
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] / b.value()[i];
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("div", a.shape(), std::move(v), {a, b},
      [a, b, ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / b.value()[i];
        }
        if (gb) {
          auto& db = sink(1);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const T bv = b.value()[i];
            db[i] -= g[i] * a.value()[i] / (bv * bv);
          }
        }
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, double c) {
  std::vector<T> v(a.numel());
  const T tc = static_cast<T>(c);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * tc;
  return make_op<T>("scale", a.shape(), std::move(v), {a},
      [tc](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * tc;
      });
}

template <typename T>
Tensor<T> add_const(const Tensor<T>& a, double c) {
  std::vector<T> v(a.numel());
  const T tc = static_cast<T>(c);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + tc;
  return make_op<T>("add_const", a.shape(), std::move(v), {a},
      [](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] > T(0) ? a.value()[i] : T(0);
  return make_op<T>("relu", a.shape(), std::move(v), {a},
      [a](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a.value()[i] > T(0)) da[i] += g[i];
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = static_cast<double>(a.value()[i]);
    v[i] = static_cast<T>(x * 0.5 * (1.0 + std::erf(x * kInvSqrt2)));
  }
  return make_op<T>("gelu", a.shape(), std::move(v), {a},
      [a](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double x = static_cast<double>(a.value()[i]);
          const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
          da[i] += g[i] * static_cast<T>(cdf + x * pdf);
        }
      });
}

template <typename T>
Tensor<T> sqrt_t(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(a.value()[i]);
  auto out = make_op<T>("sqrt", a.shape(), std::move(v), {a}, nullptr);
  if (out.requires_grad()) {
    // raw self pointer: the closure is owned by the node, no ownership cycle
    const TensorNode<T>* self = out.node();
    out.node()->backward = [self](const std::vector<T>& g, const auto& sink) {
      auto& da = sink(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T y = self->value[i];
        if (y > T(0)) da[i] += g[i] / (T(2) * y);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * a.value()[i];
  return make_op<T>("square", a.shape(), std::move(v), {a},
      [a](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += T(2) * g[i] * a.value()[i];
      });
}

// ---------------- scalar broadcast ----------------

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  check_scalar(s, "mul_scalar");
  const T sv = s.value()[0];
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * sv;
  const bool ga = a.requires_grad(), gs = s.requires_grad();
  return make_op<T>("mul_scalar", a.shape(), std::move(v), {a, s},
      [a, sv, ga, gs](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * sv;
        }
        if (gs) {
          auto& ds = sink(1);
          T acc = T(0);
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a.value()[i];
          ds[0] += acc;
        }
      });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  check_scalar(s, "add_scalar");
  const T sv = s.value()[0];
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + sv;
  const bool ga = a.requires_grad(), gs = s.requires_grad();
  return make_op<T>("add_scalar", a.shape(), std::move(v), {a, s},
      [ga, gs](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (gs) {
          auto& ds = sink(1);
          T acc = T(0);
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i];
          ds[0] += acc;
        }
      });
}

template <typename T>
Tensor<T> sub_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  check_scalar(s, "sub_scalar");
  const T sv = s.value()[0];
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - sv;
  const bool ga = a.requires_grad(), gs = s.requires_grad();
  return make_op<T>("sub_scalar", a.shape(), std::move(v), {a, s},
      [ga, gs](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (gs) {
          auto& ds = sink(1);
          T acc = T(0);
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i];
          ds[0] -= acc;
        }
      });
}

template <typename T>
Tensor<T> div_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  check_scalar(s, "div_scalar");
  const T sv = s.value()[0];
  std::vector<T> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] / sv;
  const bool ga = a.requires_grad(), gs = s.requires_grad();
  return make_op<T>("div_scalar", a.shape(), std::move(v), {a, s},
      [a, sv, ga, gs](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / sv;
        }
        if (gs) {
          auto& ds = sink(1);
          T acc = T(0);
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a.value()[i];
          ds[0] -= acc / (sv * sv);
        }
      });
}

// ---------------- reductions ----------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  T acc = T(0);
  for (const T& x : a.value()) acc += x;
  return make_op<T>("sum_all", {1}, {acc}, {a},
      [](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (auto& d : da) d += g[0];
      });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  T acc = T(0);
  for (const T& x : a.value()) acc += x;
  const T inv = static_cast<T>(1.0 / static_cast<double>(a.numel()));
  return make_op<T>("mean_all", {1}, {acc * inv}, {a},
      [inv](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        const T gi = g[0] * inv;
        for (auto& d : da) d += gi;
      });
}

// ---------------- structure ----------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: element count mismatch " + shape_str(a.shape()) + " -> " +
                     shape_str(shape));
  std::vector<T> v = a.value();
  return make_op<T>("reshape", std::move(shape), std::move(v), {a},
      [](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      });
}

template <typename T>
Tensor<T> slice_flat(const Tensor<T>& a, std::size_t i0, std::size_t i1) {
  if (i0 >= i1 || i1 > a.numel()) throw ShapeError("slice_flat: bad range");
  std::vector<T> v(a.value().begin() + i0, a.value().begin() + i1);
  return make_op<T>("slice_flat", {static_cast<int>(i1 - i0)}, std::move(v), {a},
      [i0](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i0 + i] += g[i];
      });
}

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
    throw ShapeError("concat_rows: incompatible shapes");
  std::vector<T> v;
  v.reserve(a.numel() + b.numel());
  v.insert(v.end(), a.value().begin(), a.value().end());
  v.insert(v.end(), b.value().begin(), b.value().end());
  const std::size_t na = a.numel();
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("concat_rows", {a.dim(0) + b.dim(0), a.dim(1)}, std::move(v), {a, b},
      [na, ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          for (std::size_t i = 0; i < na; ++i) da[i] += g[i];
        }
        if (gb) {
          auto& db = sink(1);
          for (std::size_t i = na; i < g.size(); ++i) db[i - na] += g[i];
        }
      });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, int r0, int r1) {
  if (a.rank() != 2 || r0 < 0 || r1 > a.dim(0) || r0 >= r1) throw ShapeError("slice_rows: bad range");
  const std::size_t c = static_cast<std::size_t>(a.dim(1));
  std::vector<T> v(a.value().begin() + r0 * c, a.value().begin() + r1 * c);
  const std::size_t off = static_cast<std::size_t>(r0) * c;
  return make_op<T>("slice_rows", {r1 - r0, a.dim(1)}, std::move(v), {a},
      [off](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[off + i] += g[i];
      });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, int c0, int c1) {
  if (a.rank() != 2 || c0 < 0 || c1 > a.dim(1) || c0 >= c1) throw ShapeError("slice_cols: bad range");
  const int r = a.dim(0), c = a.dim(1), cs = c1 - c0;
  std::vector<T> v(static_cast<std::size_t>(r) * cs);
  for (int i = 0; i < r; ++i)
    std::copy_n(a.value().begin() + static_cast<std::size_t>(i) * c + c0, cs,
                v.begin() + static_cast<std::size_t>(i) * cs);
  return make_op<T>("slice_cols", {r, cs}, std::move(v), {a},
      [r, c, c0, cs](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < cs; ++j)
            da[static_cast<std::size_t>(i) * c + c0 + j] += g[static_cast<std::size_t>(i) * cs + j];
      });
}

template <typename T>
Tensor<T> transpose2(const Tensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose2: expected rank-2");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<T> v(a.numel());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      v[static_cast<std::size_t>(j) * r + i] = a.value()[static_cast<std::size_t>(i) * c + j];
  return make_op<T>("transpose2", {c, r}, std::move(v), {a},
      [r, c](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            da[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * r + i];
      });
}

template <typename T>
Tensor<T> concat_chan(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
      a.dim(3) != b.dim(3))
    throw ShapeError("concat_chan: incompatible shapes " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> v(static_cast<std::size_t>(n) * (ca + cb) * plane);
  for (int nn = 0; nn < n; ++nn) {
    std::copy_n(a.value().begin() + static_cast<std::size_t>(nn) * ca * plane, ca * plane,
                v.begin() + static_cast<std::size_t>(nn) * (ca + cb) * plane);
    std::copy_n(b.value().begin() + static_cast<std::size_t>(nn) * cb * plane, cb * plane,
                v.begin() + static_cast<std::size_t>(nn) * (ca + cb) * plane + ca * plane);
  }
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("concat_chan", {n, ca + cb, h, w}, std::move(v), {a, b},
      [n, ca, cb, plane, ga, gb](const std::vector<T>& g, const auto& sink) {
        for (int nn = 0; nn < n; ++nn) {
          const std::size_t base = static_cast<std::size_t>(nn) * (ca + cb) * plane;
          if (ga) {
            auto& da = sink(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(ca) * plane; ++i)
              da[static_cast<std::size_t>(nn) * ca * plane + i] += g[base + i];
          }
          if (gb) {
            auto& db = sink(1);
            for (std::size_t i = 0; i < static_cast<std::size_t>(cb) * plane; ++i)
              db[static_cast<std::size_t>(nn) * cb * plane + i] += g[base + ca * plane + i];
          }
        }
      });
}

template <typename T>
Tensor<T> slice_chan(const Tensor<T>& a, int c0, int c1) {
  if (a.rank() != 4 || c0 < 0 || c1 > a.dim(1) || c0 >= c1) throw ShapeError("slice_chan: bad range");
  const int n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int cs = c1 - c0;
  std::vector<T> v(static_cast<std::size_t>(n) * cs * plane);
  for (int nn = 0; nn < n; ++nn)
    std::copy_n(a.value().begin() + (static_cast<std::size_t>(nn) * c + c0) * plane, cs * plane,
                v.begin() + static_cast<std::size_t>(nn) * cs * plane);
  return make_op<T>("slice_chan", {n, cs, h, w}, std::move(v), {a},
      [n, c, c0, cs, plane](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (int nn = 0; nn < n; ++nn)
          for (std::size_t i = 0; i < static_cast<std::size_t>(cs) * plane; ++i)
            da[(static_cast<std::size_t>(nn) * c + c0) * plane + i] +=
                g[static_cast<std::size_t>(nn) * cs * plane + i];
      });
}

template <typename T>
Tensor<T> replicate_chan(const Tensor<T>& a, int times) {
  if (a.rank() != 4) throw ShapeError("replicate_chan: expected NCHW");
  const int n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  if (n != 1) throw ShapeError("replicate_chan: expected batch 1");
  const std::size_t block = a.numel();
  std::vector<T> v(block * times);
  for (int t = 0; t < times; ++t)
    std::copy(a.value().begin(), a.value().end(), v.begin() + t * block);
  return make_op<T>("replicate_chan", {1, c * times, h, w}, std::move(v), {a},
      [block, times](const std::vector<T>& g, const auto& sink) {
        auto& da = sink(0);
        for (int t = 0; t < times; ++t)
          for (std::size_t i = 0; i < block; ++i) da[i] += g[t * block + i];
      });
}

// ---------------- attention pieces ----------------

template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, int heads) {
  if (x.rank() != 2 || x.dim(1) % heads != 0) throw ShapeError("split_heads: bad shape");
  const int t = x.dim(0), e = x.dim(1), d = e / heads;
  std::vector<T> v(x.numel());
  for (int hh = 0; hh < heads; ++hh)
    for (int tt = 0; tt < t; ++tt)
      for (int dd = 0; dd < d; ++dd)
        v[(static_cast<std::size_t>(hh) * t + tt) * d + dd] =
            x.value()[static_cast<std::size_t>(tt) * e + hh * d + dd];
  return make_op<T>("split_heads", {heads, t, d}, std::move(v), {x},
      [heads, t, e, d](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (int hh = 0; hh < heads; ++hh)
          for (int tt = 0; tt < t; ++tt)
            for (int dd = 0; dd < d; ++dd)
              dx[static_cast<std::size_t>(tt) * e + hh * d + dd] +=
                  g[(static_cast<std::size_t>(hh) * t + tt) * d + dd];
      });
}

template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("merge_heads: expected (H,T,d)");
  const int heads = x.dim(0), t = x.dim(1), d = x.dim(2), e = heads * d;
  std::vector<T> v(x.numel());
  for (int hh = 0; hh < heads; ++hh)
    for (int tt = 0; tt < t; ++tt)
      for (int dd = 0; dd < d; ++dd)
        v[static_cast<std::size_t>(tt) * e + hh * d + dd] =
            x.value()[(static_cast<std::size_t>(hh) * t + tt) * d + dd];
  return make_op<T>("merge_heads", {t, e}, std::move(v), {x},
      [heads, t, d, e](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (int hh = 0; hh < heads; ++hh)
          for (int tt = 0; tt < t; ++tt)
            for (int dd = 0; dd < d; ++dd)
              dx[(static_cast<std::size_t>(hh) * t + tt) * d + dd] +=
                  g[static_cast<std::size_t>(tt) * e + hh * d + dd];
      });
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
    throw ShapeError("bmm: incompatible shapes");
  const int bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<T> v(static_cast<std::size_t>(bs) * m * n);
  for (int i = 0; i < bs; ++i)
    kernels::matmul(a.data() + static_cast<std::size_t>(i) * m * k,
                    b.data() + static_cast<std::size_t>(i) * k * n,
                    v.data() + static_cast<std::size_t>(i) * m * n, m, k, n);
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("bmm", {bs, m, n}, std::move(v), {a, b},
      [a, b, bs, m, k, n, ga, gb](const std::vector<T>& g, const auto& sink) {
        for (int i = 0; i < bs; ++i) {
          const T* gi = g.data() + static_cast<std::size_t>(i) * m * n;
          if (ga) {
            auto& da = sink(0);
            kernels::matmul_bt(gi, b.data() + static_cast<std::size_t>(i) * k * n,
                               da.data() + static_cast<std::size_t>(i) * m * k, m, n, k, true);
          }
          if (gb) {
            auto& db = sink(1);
            kernels::matmul_at(a.data() + static_cast<std::size_t>(i) * m * k, gi,
                               db.data() + static_cast<std::size_t>(i) * k * n, k, m, n, true);
          }
        }
      });
}

template <typename T>
Tensor<T> bmm_transpose_b(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
    throw ShapeError("bmm_transpose_b: incompatible shapes");
  const int bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
  std::vector<T> v(static_cast<std::size_t>(bs) * m * n);
  for (int i = 0; i < bs; ++i)
    kernels::matmul_bt(a.data() + static_cast<std::size_t>(i) * m * k,
                       b.data() + static_cast<std::size_t>(i) * n * k,
                       v.data() + static_cast<std::size_t>(i) * m * n, m, k, n);
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("bmm_transpose_b", {bs, m, n}, std::move(v), {a, b},
      [a, b, bs, m, k, n, ga, gb](const std::vector<T>& g, const auto& sink) {
        for (int i = 0; i < bs; ++i) {
          const T* gi = g.data() + static_cast<std::size_t>(i) * m * n;
          if (ga) {
            // da = g * b ; g (m x n), b (n x k)
            auto& da = sink(0);
            kernels::matmul(gi, b.data() + static_cast<std::size_t>(i) * n * k,
                            da.data() + static_cast<std::size_t>(i) * m * k, m, n, k, true);
          }
          if (gb) {
            // db = g^T * a ; (n x m) x (m x k)
            auto& db = sink(1);
            kernels::matmul_at(gi, a.data() + static_cast<std::size_t>(i) * m * k,
                               db.data() + static_cast<std::size_t>(i) * n * k, n, m, k, true);
          }
        }
      });
}

template <typename T>
Tensor<T> softmax_last(const Tensor<T>& x) {
  if (x.rank() < 1) throw ShapeError("softmax_last: scalar input");
  const int l = x.dim(static_cast<int>(x.rank()) - 1);
  const std::size_t rows = x.numel() / static_cast<std::size_t>(l);
  std::vector<T> v(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xin = x.data() + r * l;
    T* out = v.data() + r * l;
    T mx = xin[0];
    for (int i = 1; i < l; ++i) mx = std::max(mx, xin[i]);
    T sum = T(0);
    for (int i = 0; i < l; ++i) {
      out[i] = std::exp(xin[i] - mx);
      sum += out[i];
    }
    for (int i = 0; i < l; ++i) out[i] /= sum;
  }
  auto out = make_op<T>("softmax_last", x.shape(), std::move(v), {x}, nullptr);
  if (out.requires_grad()) {
    const TensorNode<T>* self = out.node();
    const int ll = l;
    const std::size_t rr = rows;
    out.node()->backward = [self, ll, rr](const std::vector<T>& g, const auto& sink) {
      auto& dx = sink(0);
      for (std::size_t r = 0; r < rr; ++r) {
        const T* yv = self->value.data() + r * ll;
        const T* gv = g.data() + r * ll;
        T dot = T(0);
        for (int i = 0; i < ll; ++i) dot += gv[i] * yv[i];
        for (int i = 0; i < ll; ++i) dx[r * ll + i] += yv[i] * (gv[i] - dot);
      }
    };
  }
  return out;
}

// ---------------- dense ----------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> v(static_cast<std::size_t>(m) * n);
  kernels::matmul(a.data(), b.data(), v.data(), m, k, n);
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op<T>("matmul", {m, n}, std::move(v), {a, b},
      [a, b, m, k, n, ga, gb](const std::vector<T>& g, const auto& sink) {
        if (ga) {
          auto& da = sink(0);
          kernels::matmul_bt(g.data(), b.data(), da.data(), m, n, k, true);
        }
        if (gb) {
          auto& db = sink(1);
          kernels::matmul_at(a.data(), g.data(), db.data(), k, m, n, true);
        }
      });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1))
    throw ShapeError("linear: incompatible shapes " + shape_str(x.shape()) + " x " +
                     shape_str(w.shape()));
  const int t = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != out_dim))
    throw ShapeError("linear: bad bias shape");
  std::vector<T> v(static_cast<std::size_t>(t) * out_dim);
  kernels::matmul_bt(x.data(), w.data(), v.data(), t, in, out_dim);
  if (b.defined())
    for (int r = 0; r < t; ++r)
      for (int c = 0; c < out_dim; ++c) v[static_cast<std::size_t>(r) * out_dim + c] += b.value()[c];

  std::vector<Tensor<T>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  const bool gx = x.requires_grad(), gw = w.requires_grad();
  const bool gb = b.defined() && b.requires_grad();
  return make_op<T>("linear", {t, out_dim}, std::move(v), std::move(parents),
      [x, w, t, in, out_dim, gx, gw, gb](const std::vector<T>& g, const auto& sink) {
        if (gx) {
          auto& dx = sink(0);
          kernels::matmul(g.data(), w.data(), dx.data(), t, out_dim, in, true);
        }
        if (gw) {
          auto& dw = sink(1);
          kernels::matmul_at(g.data(), x.data(), dw.data(), out_dim, t, in, true);
        }
        if (gb) {
          auto& db = sink(2);
          for (int r = 0; r < t; ++r)
            for (int c = 0; c < out_dim; ++c) db[c] += g[static_cast<std::size_t>(r) * out_dim + c];
        }
      });
}

// ---------------- normalization ----------------

namespace {

// shared core for layer_norm (rows = tokens) and instance_norm (rows = (n,c) planes)
template <typename T>
struct NormStats {
  std::vector<T> xhat;
  std::vector<T> inv_std;
};

template <typename T>
NormStats<T> norm_rows(const std::vector<T>& x, std::size_t rows, std::size_t cols, double eps) {
  NormStats<T> s;
  s.xhat.resize(x.size());
  s.inv_std.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xp = x.data() + r * cols;
    T mean = T(0);
    for (std::size_t i = 0; i < cols; ++i) mean += xp[i];
    mean /= static_cast<T>(cols);
    T var = T(0);
    for (std::size_t i = 0; i < cols; ++i) {
      const T d = xp[i] - mean;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
    s.inv_std[r] = inv;
    T* xh = s.xhat.data() + r * cols;
    for (std::size_t i = 0; i < cols; ++i) xh[i] = (xp[i] - mean) * inv;
  }
  return s;
}

}  // namespace

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
  if (x.rank() < 1) throw ShapeError("layer_norm: scalar input");
  const std::size_t cols = static_cast<std::size_t>(x.dim(static_cast<int>(x.rank()) - 1));
  if (gamma.numel() != cols || beta.numel() != cols)
    throw ShapeError("layer_norm: affine parameter size mismatch");
  const std::size_t rows = x.numel() / cols;
  auto stats = std::make_shared<NormStats<T>>(norm_rows(x.value(), rows, cols, eps));
  std::vector<T> v(x.numel());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < cols; ++i)
      v[r * cols + i] = stats->xhat[r * cols + i] * gamma.value()[i] + beta.value()[i];
  const bool gx = x.requires_grad(), gg = gamma.requires_grad(), gb = beta.requires_grad();
  return make_op<T>("layer_norm", x.shape(), std::move(v), {x, gamma, beta},
      [stats, gamma, rows, cols, gx, gg, gb](const std::vector<T>& g, const auto& sink) {
        if (gx) {
          auto& dx = sink(0);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* xh = stats->xhat.data() + r * cols;
            const T* gv = g.data() + r * cols;
            T mean_gh = T(0), mean_ghx = T(0);
            for (std::size_t i = 0; i < cols; ++i) {
              const T gh = gv[i] * gamma.value()[i];
              mean_gh += gh;
              mean_ghx += gh * xh[i];
            }
            mean_gh /= static_cast<T>(cols);
            mean_ghx /= static_cast<T>(cols);
            const T inv = stats->inv_std[r];
            for (std::size_t i = 0; i < cols; ++i) {
              const T gh = gv[i] * gamma.value()[i];
              dx[r * cols + i] += (gh - mean_gh - xh[i] * mean_ghx) * inv;
            }
          }
        }
        if (gg) {
          auto& dg = sink(1);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t i = 0; i < cols; ++i)
              dg[i] += g[r * cols + i] * stats->xhat[r * cols + i];
        }
        if (gb) {
          auto& db = sink(2);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t i = 0; i < cols; ++i) db[i] += g[r * cols + i];
        }
      });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        double eps) {
  if (x.rank() != 4) throw ShapeError("instance_norm: expected NCHW");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (gamma.numel() != static_cast<std::size_t>(c) || beta.numel() != static_cast<std::size_t>(c))
    throw ShapeError("instance_norm: affine parameter size mismatch");
  const std::size_t rows = static_cast<std::size_t>(n) * c;
  auto stats = std::make_shared<NormStats<T>>(norm_rows(x.value(), rows, plane, eps));
  std::vector<T> v(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const int ch = static_cast<int>(r % c);
    for (std::size_t i = 0; i < plane; ++i)
      v[r * plane + i] = stats->xhat[r * plane + i] * gamma.value()[ch] + beta.value()[ch];
  }
  const bool gx = x.requires_grad(), gg = gamma.requires_grad(), gb = beta.requires_grad();
  return make_op<T>("instance_norm", x.shape(), std::move(v), {x, gamma, beta},
      [stats, gamma, rows, plane, c, gx, gg, gb](const std::vector<T>& g, const auto& sink) {
        if (gx) {
          auto& dx = sink(0);
          for (std::size_t r = 0; r < rows; ++r) {
            const int ch = static_cast<int>(r % c);
            const T gam = gamma.value()[ch];
            const T* xh = stats->xhat.data() + r * plane;
            const T* gv = g.data() + r * plane;
            T mean_gh = T(0), mean_ghx = T(0);
            for (std::size_t i = 0; i < plane; ++i) {
              const T gh = gv[i] * gam;
              mean_gh += gh;
              mean_ghx += gh * xh[i];
            }
            mean_gh /= static_cast<T>(plane);
            mean_ghx /= static_cast<T>(plane);
            const T inv = stats->inv_std[r];
            for (std::size_t i = 0; i < plane; ++i)
              dx[r * plane + i] += (gv[i] * gam - mean_gh - xh[i] * mean_ghx) * inv;
          }
        }
        if (gg) {
          auto& dg = sink(1);
          for (std::size_t r = 0; r < rows; ++r) {
            const int ch = static_cast<int>(r % c);
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += g[r * plane + i] * stats->xhat[r * plane + i];
            dg[ch] += acc;
          }
        }
        if (gb) {
          auto& db = sink(2);
          for (std::size_t r = 0; r < rows; ++r) {
            const int ch = static_cast<int>(r % c);
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += g[r * plane + i];
            db[ch] += acc;
          }
        }
      });
}

// ---------------- conv / resize / pool ----------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad) {
  if (x.rank() != 4 || w.rank() != 4) throw ShapeError("conv2d: expected NCHW input and OIHW weight");
  if (x.dim(1) != w.dim(1))
    throw ShapeError("conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(w.shape()));
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (b.defined() && b.numel() != static_cast<std::size_t>(co))
    throw ShapeError("conv2d: bad bias shape");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (ww + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  std::vector<T> v(static_cast<std::size_t>(n) * co * oh * ow);
  kernels::conv2d_forward(x.data(), n, ci, h, ww, w.data(), co, kh, kw,
                          b.defined() ? b.data() : nullptr, stride, pad, v.data());
  std::vector<Tensor<T>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  const bool gx = x.requires_grad(), gw = w.requires_grad();
  const bool gb = b.defined() && b.requires_grad();
  return make_op<T>("conv2d", {n, co, oh, ow}, std::move(v), std::move(parents),
      [x, w, n, ci, h, ww, co, kh, kw, oh, ow, stride, pad, gx, gw, gb](const std::vector<T>& g,
                                                                        const auto& sink) {
        if (gx) {
          auto& dx = sink(0);
          std::vector<T> tmp(dx.size());
          kernels::conv2d_backward_input(g.data(), n, co, oh, ow, w.data(), ci, kh, kw, h, ww,
                                         stride, pad, tmp.data());
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += tmp[i];
        }
        if (gw || gb) {
          std::vector<T> tw(w.numel());
          std::vector<T> tb(static_cast<std::size_t>(co));
          kernels::conv2d_backward_weight(g.data(), n, co, oh, ow, x.data(), ci, h, ww, kh, kw,
                                          stride, pad, tw.data(), tb.data());
          if (gw) {
            auto& dw = sink(1);
            for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += tw[i];
          }
          if (gb) {
            auto& db = sink(2);
            for (int i = 0; i < co; ++i) db[i] += tb[i];
          }
        }
      });
}

template <typename T>
Tensor<T> depthwise_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad) {
  if (x.rank() != 4 || w.rank() != 3) throw ShapeError("depthwise_conv: expected NCHW and CHW weight");
  if (x.dim(1) != w.dim(0))
    throw ShapeError("depthwise_conv: kernel count must equal input channels");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int kh = w.dim(1), kw = w.dim(2);
  if (b.defined() && b.numel() != static_cast<std::size_t>(c))
    throw ShapeError("depthwise_conv: bad bias shape");
  const int oh = h + 2 * pad - kh + 1;
  const int ow = ww + 2 * pad - kw + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("depthwise_conv: kernel larger than padded input");
  std::vector<T> v(static_cast<std::size_t>(n) * c * oh * ow);
  kernels::depthwise_forward(x.data(), n, c, h, ww, w.data(), kh, kw,
                             b.defined() ? b.data() : nullptr, pad, v.data());
  std::vector<Tensor<T>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  const bool gx = x.requires_grad(), gw = w.requires_grad();
  const bool gb = b.defined() && b.requires_grad();
  return make_op<T>("depthwise_conv", {n, c, oh, ow}, std::move(v), std::move(parents),
      [x, w, n, c, h, ww, kh, kw, oh, ow, pad, gx, gw, gb](const std::vector<T>& g,
                                                           const auto& sink) {
        if (gx) {
          auto& dx = sink(0);
          std::vector<T> tmp(dx.size());
          kernels::depthwise_backward_input(g.data(), n, c, oh, ow, w.data(), kh, kw, h, ww, pad,
                                            tmp.data());
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += tmp[i];
        }
        if (gw || gb) {
          std::vector<T> tw(w.numel());
          std::vector<T> tb(static_cast<std::size_t>(c));
          kernels::depthwise_backward_weight(g.data(), n, c, oh, ow, x.data(), h, ww, kh, kw, pad,
                                             tw.data(), tb.data());
          if (gw) {
            auto& dw = sink(1);
            for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += tw[i];
          }
          if (gb) {
            auto& db = sink(2);
            for (int i = 0; i < c; ++i) db[i] += tb[i];
          }
        }
      });
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int oh, int ow) {
  if (x.rank() != 4) throw ShapeError("bilinear_resize: expected NCHW");
  if (oh < 1 || ow < 1) throw ShapeError("bilinear_resize: bad target size");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<T> v(static_cast<std::size_t>(n) * c * oh * ow);
  kernels::bilinear_forward(x.data(), n, c, h, w, oh, ow, v.data());
  return make_op<T>("bilinear_resize", {n, c, oh, ow}, std::move(v), {x},
      [n, c, h, w, oh, ow](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        std::vector<T> tmp(dx.size());
        kernels::bilinear_backward(g.data(), n, c, h, w, oh, ow, tmp.data());
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += tmp[i];
      });
}

template <typename T>
Tensor<T> avgpool2(const Tensor<T>& x) {
  if (x.rank() != 4 || x.dim(2) % 2 || x.dim(3) % 2)
    throw ShapeError("avgpool2: expected NCHW with even spatial dims");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<T> v(static_cast<std::size_t>(n) * c * (h / 2) * (w / 2));
  kernels::avgpool2_forward(x.data(), n, c, h, w, v.data());
  return make_op<T>("avgpool2", {n, c, h / 2, w / 2}, std::move(v), {x},
      [n, c, h, w](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        std::vector<T> tmp(dx.size());
        kernels::avgpool2_backward(g.data(), n, c, h, w, tmp.data());
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += tmp[i];
      });
}

template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, const std::vector<double>& sc,
                         const std::vector<double>& sh) {
  if (x.rank() != 4) throw ShapeError("channel_affine: expected NCHW");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (sc.size() != static_cast<std::size_t>(c) || sh.size() != static_cast<std::size_t>(c))
    throw ShapeError("channel_affine: coefficient count mismatch");
  std::vector<T> v(x.numel());
  for (int nn = 0; nn < n; ++nn)
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(nn) * c + ch) * plane;
      const T s = static_cast<T>(sc[ch]), o = static_cast<T>(sh[ch]);
      for (std::size_t i = 0; i < plane; ++i) v[base + i] = x.value()[base + i] * s + o;
    }
  return make_op<T>("channel_affine", x.shape(), std::move(v), {x},
      [n, c, plane, sc](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (int nn = 0; nn < n; ++nn)
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t base = (static_cast<std::size_t>(nn) * c + ch) * plane;
            const T s = static_cast<T>(sc[ch]);
            for (std::size_t i = 0; i < plane; ++i) dx[base + i] += g[base + i] * s;
          }
      });
}

// ---------------- robust scaling ----------------

template <typename T>
Tensor<T> percentile(const Tensor<T>& x, double p) {
  if (p < 0.0 || p > 100.0) throw ShapeError("percentile: p outside [0,100]");
  const std::size_t n = x.numel();
  if (n == 0) throw ShapeError("percentile: empty input");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x.value()[a] < x.value()[b]; });
  const double pos = p / 100.0 * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  const std::size_t ilo = idx[lo], ihi = idx[hi];
  const T val = static_cast<T>((1.0 - frac) * static_cast<double>(x.value()[ilo]) +
                               frac * static_cast<double>(x.value()[ihi]));
  return make_op<T>("percentile", {1}, {val}, {x},
      [ilo, ihi, frac](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        dx[ilo] += static_cast<T>(1.0 - frac) * g[0];
        dx[ihi] += static_cast<T>(frac) * g[0];
      });
}

template <typename T>
Tensor<T> clip_rescale01(const Tensor<T>& m, const Tensor<T>& lo, const Tensor<T>& hi) {
  check_scalar(lo, "clip_rescale01");
  check_scalar(hi, "clip_rescale01");
  const T lv = lo.value()[0], hv = hi.value()[0];
  std::vector<T> v(m.numel());
  const bool degenerate = !(hv > lv);
  if (degenerate) {
    const T fill = hv > T(0) ? T(1) : T(0);
    std::fill(v.begin(), v.end(), fill);
  } else {
    const T d = hv - lv;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const T mv = std::clamp(m.value()[i], lv, hv);
      v[i] = (mv - lv) / d;
    }
  }
  const bool gm = m.requires_grad(), gl = lo.requires_grad(), gh = hi.requires_grad();
  return make_op<T>("clip_rescale01", m.shape(), std::move(v), {m, lo, hi},
      [m, lv, hv, degenerate, gm, gl, gh](const std::vector<T>& g, const auto& sink) {
        if (degenerate) return;  // constant output in the fallback branches
        const T inv = T(1) / (hv - lv);
        std::vector<T>* dm = gm ? &sink(0) : nullptr;
        T acc_lo = T(0), acc_hi = T(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const T mv = m.value()[i];
          if (mv > lv && mv < hv) {
            const T gi = g[i];
            if (dm) (*dm)[i] += gi * inv;
            acc_lo += gi * (mv - hv);
            acc_hi += gi * (lv - mv);
          }
        }
        if (gl) sink(1)[0] += acc_lo * inv * inv;
        if (gh) sink(2)[0] += acc_hi * inv * inv;
      });
}

#define UMRI_INSTANTIATE_OPS(T)                                                                \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> scale<T>(const Tensor<T>&, double);                                      \
  template Tensor<T> add_const<T>(const Tensor<T>&, double);                                  \
  template Tensor<T> relu<T>(const Tensor<T>&);                                               \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                               \
  template Tensor<T> sqrt_t<T>(const Tensor<T>&);                                             \
  template Tensor<T> square<T>(const Tensor<T>&);                                             \
  template Tensor<T> mul_scalar<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> sub_scalar<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> div_scalar<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                                            \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                                           \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                     \
  template Tensor<T> slice_flat<T>(const Tensor<T>&, std::size_t, std::size_t);               \
  template Tensor<T> concat_rows<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> slice_rows<T>(const Tensor<T>&, int, int);                               \
  template Tensor<T> slice_cols<T>(const Tensor<T>&, int, int);                               \
  template Tensor<T> transpose2<T>(const Tensor<T>&);                                         \
  template Tensor<T> concat_chan<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> slice_chan<T>(const Tensor<T>&, int, int);                               \
  template Tensor<T> replicate_chan<T>(const Tensor<T>&, int);                                \
  template Tensor<T> split_heads<T>(const Tensor<T>&, int);                                   \
  template Tensor<T> merge_heads<T>(const Tensor<T>&);                                        \
  template Tensor<T> bmm<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> bmm_transpose_b<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> softmax_last<T>(const Tensor<T>&);                                       \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                   double);                                                   \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                      double);                                                \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,     \
                               int);                                                          \
  template Tensor<T> depthwise_conv<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                       int);                                                  \
  template Tensor<T> bilinear_resize<T>(const Tensor<T>&, int, int);                          \
  template Tensor<T> avgpool2<T>(const Tensor<T>&);                                           \
  template Tensor<T> channel_affine<T>(const Tensor<T>&, const std::vector<double>&,          \
                                       const std::vector<double>&);                           \
  template Tensor<T> percentile<T>(const Tensor<T>&, double);                                 \
  template Tensor<T> clip_rescale01<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

UMRI_INSTANTIATE_OPS(float)
UMRI_INSTANTIATE_OPS(double)

#undef UMRI_INSTANTIATE_OPS

}  // namespace umri::ops

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "umri/nn/ops.hpp"

using namespace umri;
using testsup::grad_check;
using testsup::probe;
using testsup::random_tensor;

namespace {

constexpr double kTol = 1e-4;

// runs grad_check against every listed leaf for a graph builder
void check_leaves(const std::function<Tensor<double>()>& loss,
                  std::initializer_list<Tensor<double>> leaves) {
  for (const auto& leaf : leaves) {
    const auto r = grad_check(loss, leaf);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_err < kTol);
  }
}

}  // namespace

TEST_CASE("closed form: d(sum w^2)/dw = 2w") {
  Rng rng(1);
  Tensor<double> w = random_tensor({3, 4}, rng, true);
  Tensor<double> loss = ops::sum_all(ops::square(w));
  GradMap<double> g = backward(loss);
  const auto& gw = g.at(w.node());
  for (std::size_t i = 0; i < w.numel(); ++i)
    CHECK(gw[i] == doctest::Approx(2.0 * w.value()[i]).epsilon(1e-12));
}

TEST_CASE("frozen tensors never appear in the gradient map") {
  Rng rng(2);
  Tensor<double> w = random_tensor({4}, rng, true);
  Tensor<double> frozen = random_tensor({4}, rng, false);
  Tensor<double> loss = ops::sum_all(ops::mul(w, frozen));
  GradMap<double> g = backward(loss);
  CHECK(g.count(w.node()) == 1);
  CHECK(g.count(frozen.node()) == 0);
}

TEST_CASE("backward rejects non-scalar and non-differentiable losses") {
  Rng rng(3);
  Tensor<double> w = random_tensor({3}, rng, true);
  CHECK_THROWS_AS((void)backward(ops::square(w)), ShapeError);
  Tensor<double> c = random_tensor({3}, rng, false);
  CHECK_THROWS_AS((void)backward(ops::sum_all(ops::square(c))), ShapeError);
}

TEST_CASE("gradient accumulates across reuse of the same tensor") {
  Rng rng(4);
  Tensor<double> w = random_tensor({5}, rng, true);
  // w appears twice: loss = sum(w*w) ; d/dw = 2w
  auto loss = [&] { return ops::sum_all(ops::mul(w, w)); };
  check_leaves(loss, {w});
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(5);
  Tensor<double> a = random_tensor({2, 3, 2, 2}, rng, true);
  Tensor<double> b = random_tensor({2, 3, 2, 2}, rng, true, 0.5, 2.0);  // keep b away from 0

  check_leaves([&] { return probe(ops::add(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::sub(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::mul(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::div(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::scale(a, -1.7)); }, {a});
  check_leaves([&] { return probe(ops::add_const(a, 0.3)); }, {a});
  check_leaves([&] { return probe(ops::gelu(a)); }, {a});
  check_leaves([&] { return probe(ops::square(a)); }, {a});
  check_leaves([&] { return probe(ops::sqrt_t(b)); }, {b});
  check_leaves([&] { return probe(ops::relu(a)); }, {a});
}

TEST_CASE("scalar-broadcast op gradients match finite differences") {
  Rng rng(6);
  Tensor<double> a = random_tensor({3, 4}, rng, true);
  Tensor<double> s = random_tensor({1}, rng, true, 0.5, 1.5);
  check_leaves([&] { return probe(ops::mul_scalar(a, s)); }, {a, s});
  check_leaves([&] { return probe(ops::add_scalar(a, s)); }, {a, s});
  check_leaves([&] { return probe(ops::sub_scalar(a, s)); }, {a, s});
  check_leaves([&] { return probe(ops::div_scalar(a, s)); }, {a, s});
}

TEST_CASE("reduction and structure op gradients match finite differences") {
  Rng rng(7);
  Tensor<double> a = random_tensor({4, 6}, rng, true);
  Tensor<double> b = random_tensor({3, 6}, rng, true);
  Tensor<double> c4 = random_tensor({2, 3, 4, 4}, rng, true);
  Tensor<double> d4 = random_tensor({2, 2, 4, 4}, rng, true);
  Tensor<double> e4 = random_tensor({1, 2, 3, 3}, rng, true);

  check_leaves([&] { return ops::sum_all(a); }, {a});
  check_leaves([&] { return ops::mean_all(a); }, {a});
  check_leaves([&] { return probe(ops::reshape(a, {2, 12})); }, {a});
  check_leaves([&] { return probe(ops::slice_flat(a, 3, 17)); }, {a});
  check_leaves([&] { return probe(ops::concat_rows(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::slice_rows(a, 1, 3)); }, {a});
  check_leaves([&] { return probe(ops::slice_cols(a, 2, 5)); }, {a});
  check_leaves([&] { return probe(ops::transpose2(a)); }, {a});
  check_leaves([&] { return probe(ops::concat_chan(c4, d4)); }, {c4, d4});
  check_leaves([&] { return probe(ops::slice_chan(c4, 1, 3)); }, {c4});
  check_leaves([&] { return probe(ops::replicate_chan(e4, 3)); }, {e4});
}

TEST_CASE("attention piece gradients match finite differences") {
  Rng rng(8);
  Tensor<double> x = random_tensor({6, 8}, rng, true);
  Tensor<double> q = random_tensor({2, 5, 3}, rng, true);
  Tensor<double> k = random_tensor({2, 5, 3}, rng, true);
  Tensor<double> v = random_tensor({2, 5, 3}, rng, true);
  Tensor<double> kt = random_tensor({2, 3, 5}, rng, true);

  check_leaves([&] { return probe(ops::split_heads(x, 2)); }, {x});
  check_leaves([&] { return probe(ops::merge_heads(q)); }, {q});
  check_leaves([&] { return probe(ops::bmm(q, kt)); }, {q, kt});
  check_leaves([&] { return probe(ops::bmm_transpose_b(q, k)); }, {q, k});
  check_leaves([&] { return probe(ops::softmax_last(x)); }, {x});
  // full attention block
  auto attn = [&] {
    Tensor<double> scores = ops::scale(ops::bmm_transpose_b(q, k), 1.0 / std::sqrt(3.0));
    return probe(ops::bmm(ops::softmax_last(scores), v));
  };
  check_leaves(attn, {q, k, v});
}

TEST_CASE("dense op gradients match finite differences") {
  Rng rng(9);
  Tensor<double> a = random_tensor({4, 5}, rng, true);
  Tensor<double> b = random_tensor({5, 3}, rng, true);
  Tensor<double> w = random_tensor({6, 5}, rng, true);
  Tensor<double> bias = random_tensor({6}, rng, true);
  check_leaves([&] { return probe(ops::matmul(a, b)); }, {a, b});
  check_leaves([&] { return probe(ops::linear(a, w, bias)); }, {a, w, bias});
}

TEST_CASE("normalization gradients match finite differences") {
  Rng rng(10);
  Tensor<double> x = random_tensor({5, 7}, rng, true);
  Tensor<double> g = random_tensor({7}, rng, true, 0.5, 1.5);
  Tensor<double> b = random_tensor({7}, rng, true);
  check_leaves([&] { return probe(ops::layer_norm(x, g, b)); }, {x, g, b});

  Tensor<double> xi = random_tensor({2, 3, 4, 4}, rng, true);
  Tensor<double> gi = random_tensor({3}, rng, true, 0.5, 1.5);
  Tensor<double> bi = random_tensor({3}, rng, true);
  check_leaves([&] { return probe(ops::instance_norm(xi, gi, bi)); }, {xi, gi, bi});
}

TEST_CASE("instance norm forward statistics") {
  Rng rng(101);
  Tensor<double> x = random_tensor({2, 3, 4, 4}, rng, false);
  Tensor<double> gamma = Tensor<double>::constant({3}, {1, 1, 1});
  Tensor<double> beta = Tensor<double>::constant({3}, {0, 0, 0});
  Tensor<double> y = ops::instance_norm(x, gamma, beta, 1e-9);
  // per (n,c) zero mean, unit variance
  for (int r = 0; r < 6; ++r) {
    double mean = 0, var = 0;
    for (int i = 0; i < 16; ++i) mean += y.value()[r * 16 + i];
    mean /= 16;
    for (int i = 0; i < 16; ++i) {
      const double d = y.value()[r * 16 + i] - mean;
      var += d * d;
    }
    var /= 16;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-5);
  }

  // constant channel -> zeros before affine
  Tensor<double> xc = Tensor<double>::constant({1, 1, 2, 2}, {3.7, 3.7, 3.7, 3.7});
  Tensor<double> g1 = Tensor<double>::constant({1}, {1});
  Tensor<double> b1 = Tensor<double>::constant({1}, {0});
  Tensor<double> yc = ops::instance_norm(xc, g1, b1);
  for (double v : yc.value()) CHECK(std::abs(v) < 1e-9);

  // two-pass oracle comparison on random input
  Tensor<double> gr = random_tensor({3}, rng, false, 0.5, 1.5);
  Tensor<double> br = random_tensor({3}, rng, false);
  Tensor<double> yr = ops::instance_norm(x, gr, br, 1e-5);
  for (int nn = 0; nn < 2; ++nn)
    for (int c = 0; c < 3; ++c) {
      const int r = nn * 3 + c;
      double mean = 0, var = 0;
      for (int i = 0; i < 16; ++i) mean += x.value()[r * 16 + i];
      mean /= 16;
      for (int i = 0; i < 16; ++i) {
        const double d = x.value()[r * 16 + i] - mean;
        var += d * d;
      }
      var /= 16;
      for (int i = 0; i < 16; ++i) {
        const double expect =
            (x.value()[r * 16 + i] - mean) / std::sqrt(var + 1e-5) * gr.value()[c] + br.value()[c];
        CHECK(yr.value()[r * 16 + i] == doctest::Approx(expect).epsilon(1e-10));
      }
    }
}

TEST_CASE("layer norm matches a two-pass oracle over the last axis") {
  Rng rng(102);
  Tensor<double> x = random_tensor({4, 6}, rng, false);
  Tensor<double> g = random_tensor({6}, rng, false, 0.5, 1.5);
  Tensor<double> b = random_tensor({6}, rng, false);
  Tensor<double> y = ops::layer_norm(x, g, b, 1e-5);
  for (int r = 0; r < 4; ++r) {
    double mean = 0, var = 0;
    for (int i = 0; i < 6; ++i) mean += x.value()[r * 6 + i];
    mean /= 6;
    for (int i = 0; i < 6; ++i) {
      const double d = x.value()[r * 6 + i] - mean;
      var += d * d;
    }
    var /= 6;
    for (int i = 0; i < 6; ++i) {
      const double expect =
          (x.value()[r * 6 + i] - mean) / std::sqrt(var + 1e-5) * g.value()[i] + b.value()[i];
      CHECK(y.value()[r * 6 + i] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("conv and pooling gradients match finite differences") {
  Rng rng(11);
  Tensor<double> x = random_tensor({2, 3, 6, 6}, rng, true);
  Tensor<double> w = random_tensor({4, 3, 3, 3}, rng, true);
  Tensor<double> b = random_tensor({4}, rng, true);
  Tensor<double> none;
  check_leaves([&] { return probe(ops::conv2d(x, w, b, 1, 1)); }, {x, w, b});
  check_leaves([&] { return probe(ops::conv2d(x, w, none, 2, 0)); }, {x, w});

  Tensor<double> dw = random_tensor({3, 3, 3}, rng, true);
  Tensor<double> db = random_tensor({3}, rng, true);
  check_leaves([&] { return probe(ops::depthwise_conv(x, dw, db, 1)); }, {x, dw, db});

  check_leaves([&] { return probe(ops::avgpool2(x)); }, {x});
  check_leaves([&] { return probe(ops::bilinear_resize(x, 9, 4)); }, {x});
  check_leaves([&] { return probe(ops::bilinear_resize(x, 12, 12)); }, {x});
  check_leaves([&] { return probe(ops::channel_affine(x, {2.0, 0.5, -1.0}, {0.1, 0.0, 0.7})); },
               {x});
}

TEST_CASE("conv2d graph op: identity 1x1 kernel and averaging kernel") {
  Rng rng(12);
  Tensor<double> x = random_tensor({1, 2, 5, 5}, rng, false);
  // 1x1 identity mixing
  Tensor<double> w = Tensor<double>::constant({2, 2, 1, 1}, {1, 0, 0, 1});
  Tensor<double> none;
  Tensor<double> y = ops::conv2d(x, w, none, 1, 0);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.value()[i] == doctest::Approx(x.value()[i]).epsilon(1e-14));

  // 3x3 averaging on a constant image with zero padding: interior preserved,
  // border attenuated by the valid-tap count
  Tensor<double> c = Tensor<double>::constant({1, 1, 5, 5}, std::vector<double>(25, 1.0));
  Tensor<double> avg =
      Tensor<double>::constant({1, 1, 3, 3}, std::vector<double>(9, 1.0 / 9.0));
  Tensor<double> z = ops::conv2d(c, avg, none, 1, 1);
  CHECK(z.value()[2 * 5 + 2] == doctest::Approx(1.0).epsilon(1e-12));       // interior
  CHECK(z.value()[0] == doctest::Approx(4.0 / 9.0).epsilon(1e-12));         // corner
  CHECK(z.value()[2] == doctest::Approx(6.0 / 9.0).epsilon(1e-12));         // edge
}

TEST_CASE("depthwise + pointwise equals the composed full convolution") {
  Rng rng(13);
  const int c = 2, co = 3;
  Tensor<double> x = random_tensor({1, c, 6, 6}, rng, false);
  Tensor<double> dw = random_tensor({c, 3, 3}, rng, false);
  Tensor<double> pw = random_tensor({co, c, 1, 1}, rng, false);
  Tensor<double> none;
  Tensor<double> sep = ops::conv2d(ops::depthwise_conv(x, dw, none, 1), pw, none, 1, 0);

  // composed kernel: full conv weight[oc][ic][k] = pw[oc][ic] * dw[ic][k]
  std::vector<double> composed(static_cast<std::size_t>(co) * c * 9);
  for (int oc = 0; oc < co; ++oc)
    for (int ic = 0; ic < c; ++ic)
      for (int k = 0; k < 9; ++k)
        composed[(static_cast<std::size_t>(oc) * c + ic) * 9 + k] =
            pw.value()[oc * c + ic] * dw.value()[ic * 9 + k];
  Tensor<double> wfull = Tensor<double>::constant({co, c, 3, 3}, std::move(composed));
  Tensor<double> full = ops::conv2d(x, wfull, none, 1, 1);
  for (std::size_t i = 0; i < sep.numel(); ++i)
    CHECK(sep.value()[i] == doctest::Approx(full.value()[i]).epsilon(1e-6));

  // parameter counts: depthwise-separable strictly smaller for co > 1
  const int sep_params = c * 9 + c * co;
  const int full_params = c * co * 9;
  CHECK(sep_params < full_params);
}

TEST_CASE("depthwise identity-center kernels with identity pointwise pass through") {
  Rng rng(14);
  const int c = 3;
  Tensor<double> x = random_tensor({1, c, 4, 4}, rng, false);
  std::vector<double> dwv(static_cast<std::size_t>(c) * 9, 0.0);
  for (int i = 0; i < c; ++i) dwv[i * 9 + 4] = 1.0;  // center tap
  Tensor<double> dw = Tensor<double>::constant({c, 3, 3}, std::move(dwv));
  std::vector<double> pwv(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i) pwv[i * c + i] = 1.0;
  Tensor<double> pw = Tensor<double>::constant({c, c, 1, 1}, std::move(pwv));
  Tensor<double> none;
  Tensor<double> y = ops::conv2d(ops::depthwise_conv(x, dw, none, 1), pw, none, 1, 0);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.value()[i] == doctest::Approx(x.value()[i]).epsilon(1e-14));
}

TEST_CASE("bilinear resize closed forms") {
  // same-size resize is the identity
  Rng rng(15);
  Tensor<double> x = random_tensor({1, 1, 4, 4}, rng, false);
  Tensor<double> same = ops::bilinear_resize(x, 4, 4);
  CHECK(same.value() == x.value());

  // constant image stays constant under any resize
  Tensor<double> c = Tensor<double>::constant({1, 1, 3, 5}, std::vector<double>(15, 2.5));
  Tensor<double> up = ops::bilinear_resize(c, 7, 11);
  for (double v : up.value()) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));

  // 2x2 {0,0;1,1} -> 4x4, align_corners=false: rows sample at y=-0.25,0.25,0.75,1.25
  Tensor<double> t = Tensor<double>::constant({1, 1, 2, 2}, {0, 0, 1, 1});
  Tensor<double> u = ops::bilinear_resize(t, 4, 4);
  const double expect_rows[4] = {0.0, 0.25, 0.75, 1.0};
  for (int r = 0; r < 4; ++r)
    for (int cc = 0; cc < 4; ++cc)
      CHECK(u.value()[r * 4 + cc] == doctest::Approx(expect_rows[r]).epsilon(1e-12));
}

TEST_CASE("percentile and clip_rescale01 gradients match finite differences") {
  Rng rng(16);
  Tensor<double> x = random_tensor({40}, rng, true, 0.0, 1.0);
  check_leaves([&] { return ops::percentile(x, 30.0); }, {x});
  check_leaves(
      [&] {
        Tensor<double> lo = ops::percentile(x, 10.0);
        Tensor<double> hi = ops::percentile(x, 90.0);
        return probe(ops::clip_rescale01(x, lo, hi));
      },
      {x});
}

TEST_CASE("percentile matches a sort-based oracle") {
  Rng rng(17);
  Tensor<double> x = random_tensor({101}, rng, false);
  std::vector<double> sorted(x.value().begin(), x.value().end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : {0.0, 25.0, 50.0, 99.0, 100.0}) {
    const double pos = p / 100.0 * 100.0;
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min<std::size_t>(lo + 1, 100);
    const double frac = pos - static_cast<double>(lo);
    const double expect = (1 - frac) * sorted[lo] + frac * sorted[hi];
    CHECK(ops::percentile(x, p).value()[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("complex pair op gradients match finite differences") {
  Rng rng(18);
  Tensor<double> img = random_tensor({2, 4, 4}, rng, true);
  Tensor<double> coil = random_tensor({3, 2, 4, 4}, rng, true);
  Tensor<double> coil2 = random_tensor({3, 2, 4, 4}, rng, true);

  check_leaves([&] { return probe(ops::magnitude(img)); }, {img});
  check_leaves([&] { return probe(ops::sum_coils(coil)); }, {coil});
  check_leaves([&] { return probe(ops::rss(coil)); }, {coil});
  check_leaves([&] { return probe(ops::normalize_rss(coil, 1e-8)); }, {coil});
  check_leaves([&] { return probe(ops::fft2c(coil)); }, {coil});
  check_leaves([&] { return probe(ops::ifft2c(coil)); }, {coil});

  std::vector<std::uint8_t> mask = {1, 0, 1, 1};
  check_leaves([&] { return probe(ops::mask_cols(coil, mask)); }, {coil});

  for (bool ca : {false, true})
    for (bool cb : {false, true}) {
      CAPTURE(ca);
      CAPTURE(cb);
      check_leaves([&] { return probe(ops::complex_mul(coil, coil2, ca, cb)); }, {coil, coil2});
      // broadcast over the coil axis
      check_leaves([&] { return probe(ops::complex_mul(coil, img, ca, cb)); }, {coil, img});
      check_leaves([&] { return probe(ops::complex_mul(img, coil, ca, cb)); }, {img, coil});
    }
}

TEST_CASE("complex_mul agrees with std::complex arithmetic") {
  Rng rng(19);
  Tensor<double> a = random_tensor({2, 3, 3}, rng, false);
  Tensor<double> b = random_tensor({2, 3, 3}, rng, false);
  Tensor<double> y = ops::complex_mul(a, b, false, true);  // a * conj(b)
  for (int p = 0; p < 9; ++p) {
    const std::complex<double> av(a.value()[p], a.value()[9 + p]);
    const std::complex<double> bv(b.value()[p], b.value()[9 + p]);
    const std::complex<double> expect = av * std::conj(bv);
    CHECK(y.value()[p] == doctest::Approx(expect.real()).epsilon(1e-12));
    CHECK(y.value()[9 + p] == doctest::Approx(expect.imag()).epsilon(1e-12));
  }
}

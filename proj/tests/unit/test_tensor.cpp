#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "imgep/error.hpp"
#include "imgep/tensor/adam.hpp"
#include "imgep/tensor/checkpoint.hpp"
#include "imgep/tensor/graph.hpp"
#include "imgep/tensor/ops.hpp"
#include "oracles.hpp"

using namespace imgep;
using namespace imgep::tensor;

namespace {

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor<double> t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(element_count({2, 3, 4}) == 24);
  t(1, 2) = 4.0;
  CHECK(t[5] == 4.0);
  auto r = t.reshaped({3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(r[5] == 4.0);
  CHECK_THROWS_AS(t.reshape({4, 2}), ArgumentError);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>(3)), ArgumentError);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv2d examples") {
  Conv2dSpec spec;
  Tensor<double> img({1, 1, 8, 8}, 0.7);
  Tensor<double> k({1, 1, 4, 4});
  k(0, 0, 1, 1) = 1.0;  // with pad 1 and stride 2, tap (1,1) always reads inside the image
  auto y = conv2d_forward(img, k, Tensor<double>{}, spec);
  CHECK(y.shape() == Shape{1, 1, 4, 4});
  for (double v : y.values()) CHECK(v == 0.7);

  Tensor<double> zero({2, 1, 4, 4});
  auto z = conv2d_forward(img, zero.reshaped({2, 1, 4, 4}), Tensor<double>{}, spec);
  for (double v : z.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(conv2d_forward(img, Tensor<double>({1, 2, 4, 4}), Tensor<double>{}, spec), ArgumentError);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  Rng rng(1);
  SUBCASE("1x1x6x6 with the default geometry") {
    auto x = oracle::random_tensor<double>({1, 1, 6, 6}, rng);
    auto k = oracle::random_tensor<double>({1, 1, 4, 4}, rng);
    CHECK(max_abs_diff(conv2d_forward(x, k, Tensor<double>{}, {}), oracle::conv2d(x, k, Tensor<double>{}, {})) <=
          1e-12);
  }
  SUBCASE("random geometries") {
    for (int trial = 0; trial < 40; ++trial) {
      Conv2dSpec spec;
      spec.kernel = 1 + trial % 5;
      spec.stride = 1 + trial % 2;
      spec.padding = (trial / 2) % (spec.kernel / 2 + 1);
      const std::size_t B = 1 + trial % 3, C = 1 + trial % 4, O = 1 + (trial / 3) % 3;
      const std::size_t H = spec.kernel + 3 + trial % 5;
      auto x = oracle::random_tensor<double>({B, C, H, H + 1}, rng);
      auto k = oracle::random_tensor<double>({O, C, spec.kernel, spec.kernel}, rng);
      auto b = oracle::random_tensor<double>({O}, rng);
      CHECK(max_abs_diff(conv2d_forward(x, k, b, spec), oracle::conv2d(x, k, b, spec)) <= 1e-12);
    }
  }
}

TEST_CASE("transposed convolution matches the scatter oracle and is the adjoint of conv2d") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    Conv2dSpec spec;
    spec.kernel = 2 + trial % 3;
    spec.stride = 1 + trial % 2;
    spec.padding = (trial / 2) % (spec.kernel / 2 + 1);
    const std::size_t B = 1 + trial % 2, C = 1 + trial % 3, O = 1 + (trial / 4) % 3;
    const std::size_t H = 3 + trial % 4;
    auto x = oracle::random_tensor<double>({B, C, H, H + 2}, rng);
    auto k = oracle::random_tensor<double>({C, O, spec.kernel, spec.kernel}, rng);
    auto b = oracle::random_tensor<double>({O}, rng);
    auto y = conv_transpose2d_forward(x, k, b, spec);
    CHECK(max_abs_diff(y, oracle::conv_transpose2d(x, k, b, spec)) <= 1e-12);

    // <conv_t(x), u> == <x, conv(u)> with the same kernel and no bias.
    auto yt = conv_transpose2d_forward(x, k, Tensor<double>{}, spec);
    auto u = oracle::random_tensor<double>(yt.shape(), rng);
    auto cu = conv2d_forward(u, k, Tensor<double>{}, spec);
    if (cu.shape() != x.shape()) continue;  // only when the geometry is exactly invertible
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < yt.size(); ++i) lhs += yt[i] * u[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * cu[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("stride-2 shape algebra") {
  Conv2dSpec spec;
  std::size_t s = 64;
  for (std::size_t expected : {32u, 16u, 8u, 4u}) {
    s = spec.output_size(s);
    CHECK(s == expected);
  }
  for (std::size_t expected : {8u, 16u, 32u, 64u}) {
    s = spec.transposed_output_size(s);
    CHECK(s == expected);
  }
}

TEST_CASE("dense, relu and sigmoid match direct formulas") {
  Rng rng(3);
  auto x = oracle::random_tensor<double>({4, 7}, rng);
  auto w = oracle::random_tensor<double>({5, 7}, rng);
  auto b = oracle::random_tensor<double>({5}, rng);
  CHECK(max_abs_diff(dense_forward(x, w, b), oracle::dense(x, w, b)) <= 1e-12);

  auto r = relu(x);
  auto s = sigmoid(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(r[i] == std::max(0.0, x[i]));
    CHECK(s[i] == doctest::Approx(1.0 / (1.0 + std::exp(-x[i]))).epsilon(1e-15));
  }
  Tensor<double> extreme({1, 2}, std::vector<double>{-800.0, 800.0});
  auto se = sigmoid(extreme);
  CHECK(se[0] == 0.0);
  CHECK(se[1] == 1.0);
}

TEST_CASE("reparameterize") {
  Tensor<double> mu({1, 3}, std::vector<double>{0.5, -1.0, 2.0});
  Tensor<double> lv({1, 3}, -100.0);
  Rng rng(4);
  auto z = reparameterize(mu, lv, rng);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(z[i] - mu[i]) < 1e-10);

  Rng a(9), b(9);
  Tensor<double> lv0({1, 3}, 0.3);
  CHECK(reparameterize(mu, lv0, a) == reparameterize(mu, lv0, b));

  const std::size_t n = 100000;
  Tensor<double> m0({n, 1}), l0({n, 1});
  auto draws = reparameterize(m0, l0, rng);
  double mean = 0.0, var = 0.0;
  for (double v : draws.values()) mean += v / n;
  for (double v : draws.values()) var += (v - mean) * (v - mean) / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("kl_gaussian") {
  CHECK(kl_gaussian(Tensor<double>({1, 4}), Tensor<double>({1, 4})) == 0.0);
  CHECK(kl_gaussian(Tensor<double>({1, 1}, 1.0), Tensor<double>({1, 1}, 0.0)) == doctest::Approx(0.5));
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    auto mu = oracle::random_tensor<double>({2, 3}, rng, -3, 3);
    auto lv = oracle::random_tensor<double>({2, 3}, rng, -5, 5);
    CHECK(kl_gaussian(mu, lv) >= -1e-12);
  }
}

TEST_CASE("bernoulli_nll") {
  Rng rng(6);
  auto x = oracle::random_tensor<double>({2, 5}, rng, 0, 1);
  CHECK(bernoulli_nll(Tensor<double>({2, 5}), x) == doctest::Approx(10 * std::log(2.0)).epsilon(1e-14));

  Tensor<double> big({1, 1}, 50.0), one({1, 1}, 1.0);
  double v = bernoulli_nll(big, one);
  CHECK(std::isfinite(v));
  CHECK(v < 1e-20);
  Tensor<double> huge({1, 2}, std::vector<double>{1e4, -1e4});
  Tensor<double> wrong({1, 2}, std::vector<double>{0.0, 1.0});
  CHECK(bernoulli_nll(huge, wrong) == doctest::Approx(2e4));

  // Direct formula in extended precision on 3-pixel cases.
  for (int trial = 0; trial < 100; ++trial) {
    auto l = oracle::random_tensor<double>({1, 3}, rng, -8, 8);
    auto t = oracle::random_tensor<double>({1, 3}, rng, 0, 1);
    long double ref = 0.0L;
    for (std::size_t i = 0; i < 3; ++i) {
      long double p = 1.0L / (1.0L + std::exp(-static_cast<long double>(l[i])));
      ref -= t[i] * std::log(p) + (1.0L - t[i]) * std::log(1.0L - p);
    }
    CHECK(std::abs(bernoulli_nll(l, t) - static_cast<double>(ref)) < 1e-10);
    CHECK(bernoulli_nll(l, t) >= 0.0);
  }
}

TEST_CASE("graph backward examples") {
  Parameter<double> p("p", Tensor<double>({2, 3}, std::vector<double>{1, -2, 3, 0.5, 0, -1}));

  SUBCASE("sum") {
    Graph<double> g;
    NodeId loss = g.sum(g.parameter(p));
    g.forward();
    g.backward(loss);
    for (double v : p.grad.values()) CHECK(v == 1.0);
  }
  SUBCASE("half sum of squares") {
    Graph<double> g;
    NodeId loss = g.sum(g.scale(g.square(g.parameter(p)), 0.5));
    g.forward();
    CHECK(g.value(loss)[0] == doctest::Approx(0.5 * (1 + 4 + 9 + 0.25 + 0 + 1)));
    g.backward(loss);
    for (std::size_t i = 0; i < p.value.size(); ++i) CHECK(p.grad[i] == p.value[i]);
  }
  SUBCASE("backward before forward") {
    Graph<double> g;
    NodeId loss = g.sum(g.parameter(p));
    CHECK_THROWS_AS(g.backward(loss), StateError);
    g.forward();
    NodeId other = g.sum(g.parameter(p));
    CHECK_THROWS_AS(g.backward(other), StateError);
  }
  SUBCASE("non-scalar loss") {
    Graph<double> g;
    NodeId x = g.parameter(p);
    g.forward();
    CHECK_THROWS_AS(g.backward(x), ArgumentError);
  }
  SUBCASE("shape errors at construction") {
    Graph<double> g;
    NodeId x = g.parameter(p);
    NodeId y = g.input(Tensor<double>({3, 2}));
    CHECK_THROWS_AS(g.add(x, y), ArgumentError);
    CHECK_THROWS_AS(g.kl_gaussian(x, y), ArgumentError);
    CHECK_THROWS_AS(g.set_input(y, Tensor<double>({2, 3})), ArgumentError);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves everything at rest") {
    std::vector<Parameter<double>> ps;
    ps.emplace_back("w", Tensor<double>({3}, std::vector<double>{1, 2, 3}));
    AdamState<double> st(ps, 0.1);
    adam_step(st, std::span<Parameter<double>>(ps));
    CHECK(ps[0].value == Tensor<double>({3}, std::vector<double>{1, 2, 3}));
    for (double v : st.first_moment[0].values()) CHECK(v == 0.0);
    for (double v : st.second_moment[0].values()) CHECK(v == 0.0);
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves by lr times the sign of the gradient") {
    // m = 0.1 g, v = 0.001 g^2; m_hat = g, v_hat = g^2; step = lr g / (|g| + eps).
    std::vector<Parameter<double>> ps;
    ps.emplace_back("w", Tensor<double>({2}, std::vector<double>{0.0, 0.0}));
    ps[0].grad = Tensor<double>({2}, std::vector<double>{3.0, -0.25});
    AdamState<double> st(ps, 0.01);
    adam_step(st, std::span<Parameter<double>>(ps));
    CHECK(ps[0].value[0] == doctest::Approx(-0.01 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(ps[0].value[1] == doctest::Approx(0.01 * 0.25 / (0.25 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("minimizes p^2") {
    std::vector<Parameter<double>> ps;
    ps.emplace_back("p", Tensor<double>({1}, 1.0));
    AdamState<double> st(ps, 0.01);
    for (int i = 0; i < 1000; ++i) {
      ps[0].grad[0] = 2.0 * ps[0].value[0];
      adam_step(st, std::span<Parameter<double>>(ps));
    }
    CHECK(std::abs(ps[0].value[0]) < 0.05);
  }
  SUBCASE("shape mismatch") {
    std::vector<Parameter<double>> ps;
    ps.emplace_back("p", Tensor<double>({2}));
    AdamState<double> st(ps, 0.01);
    ps[0].grad = Tensor<double>({3});
    CHECK_THROWS_AS(adam_step(st, std::span<Parameter<double>>(ps)), ArgumentError);
    std::vector<Parameter<double>> more(2);
    CHECK_THROWS_AS(adam_step(st, std::span<Parameter<double>>(more)), ArgumentError);
  }
}

TEST_CASE("float and double kernels agree") {
  Rng rng(7);
  auto x = oracle::random_tensor<double>({2, 3, 8, 8}, rng);
  auto k = oracle::random_tensor<double>({4, 3, 4, 4}, rng);
  auto b = oracle::random_tensor<double>({4}, rng);
  auto to_float = [](const Tensor<double>& t) {
    std::vector<float> v(t.values().begin(), t.values().end());
    return Tensor<float>(t.shape(), v);
  };
  auto yd = conv2d_forward(x, k, b, {});
  auto yf = conv2d_forward(to_float(x), to_float(k), to_float(b), {});
  for (std::size_t i = 0; i < yd.size(); ++i) CHECK(std::abs(yd[i] - yf[i]) < 1e-4);
}

TEST_CASE("checkpoint format") {
  const auto dir = std::filesystem::temp_directory_path() / "imgep_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "t.ckpt";
  Rng rng(8);
  std::vector<Tensor<double>> ts{oracle::random_tensor<double>({2, 3}, rng), oracle::random_tensor<double>({4}, rng)};
  write_checkpoint(path, ts);
  // 8 header bytes, then per tensor a rank word, u64 dims and f64 values.
  CHECK(std::filesystem::file_size(path) == 8 + (4 + 2 * 8 + 6 * 8) + (4 + 8 + 4 * 8));
  CHECK(read_checkpoint<double>(path) == ts);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "IMGC");

  std::ofstream(dir / "junk.ckpt") << "nope";
  CHECK_THROWS_AS(read_checkpoint<double>(dir / "junk.ckpt"), IoError);
  CHECK_THROWS_AS(read_checkpoint<double>(dir / "absent.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

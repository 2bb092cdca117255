#include <doctest.h>

#include "imgep/error.hpp"
#include "imgep/meta_policy.hpp"
#include "oracles.hpp"

using namespace imgep;

namespace {

std::vector<double> uniform_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("single record, no noise") {
  MetaPolicy meta({{0, 1}}, 1, 0.0);
  Rng rng(1);
  auto theta = random_params(2, rng);
  meta.update(0, std::vector<double>{0.5}, theta, std::vector<double>{0.1, 0.2});
  CHECK(meta.infer(0, std::vector<double>{0.5}, std::vector<double>{0.9, -0.9}, rng) == theta);
}

TEST_CASE("exact key returns its own parameters") {
  MetaPolicy meta({{0, 1, 2}}, 2, 0.0);
  Rng rng(2);
  std::vector<std::vector<double>> ctx, emb;
  std::vector<DmpParams> thetas;
  for (std::size_t e = 0; e < 50; ++e) {
    ctx.push_back(uniform_vec(2, rng));
    emb.push_back(uniform_vec(3, rng));
    thetas.push_back(random_params(1, rng));
    meta.update(e, ctx.back(), thetas.back(), emb.back());
  }
  for (std::size_t e = 0; e < 50; ++e) {
    CHECK(meta.nearest(0, ctx[e], emb[e]).squared_distance == 0.0);
    CHECK(meta.infer(0, ctx[e], emb[e], rng) == thetas[e]);
  }
}

TEST_CASE("ties go to the earliest episode") {
  MetaPolicy meta({{0}}, 0, 0.0);
  Rng rng(3);
  auto a = random_params(1, rng), b = random_params(1, rng), c = random_params(1, rng);
  meta.update(4, {}, a, std::vector<double>{1.0});
  meta.update(7, {}, b, std::vector<double>{-1.0});
  meta.update(9, {}, c, std::vector<double>{1.0});
  auto m = meta.nearest(0, {}, std::vector<double>{0.0});
  CHECK(m.episode == 4);
  CHECK(meta.infer(0, {}, std::vector<double>{1.0}, rng) == a);
}

TEST_CASE("nearest neighbour matches the linear-scan oracle") {
  Rng rng(4);
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t ctx_dim = instance % 3, goal_dim = 1 + instance % 4;
    std::vector<std::size_t> dims(goal_dim);
    for (std::size_t d = 0; d < goal_dim; ++d) dims[d] = d;
    MetaPolicy meta({dims}, ctx_dim, 0.0);
    std::vector<std::vector<double>> keys;
    std::vector<DmpParams> thetas;
    for (std::size_t e = 0; e < 100; ++e) {
      auto c = uniform_vec(ctx_dim, rng);
      auto g = uniform_vec(goal_dim, rng);
      auto key = c;
      key.insert(key.end(), g.begin(), g.end());
      keys.push_back(key);
      thetas.push_back(random_params(1, rng));
      meta.update(e, c, thetas.back(), g);
    }
    for (int q = 0; q < 20; ++q) {
      auto c = uniform_vec(ctx_dim, rng);
      auto g = uniform_vec(goal_dim, rng);
      auto query = c;
      query.insert(query.end(), g.begin(), g.end());
      std::size_t expected = oracle::nearest(keys, query);
      CHECK(meta.nearest(0, c, g).record == expected);
      CHECK(meta.infer(0, c, g, rng) == thetas[expected]);
    }
  }
}

TEST_CASE("every update lands in every database") {
  MetaPolicy meta({{0, 1}, {2, 3}, {4, 5}}, 1, 0.05);
  Rng rng(5);
  std::vector<double> emb{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  meta.update(0, std::vector<double>{0.0}, random_params(1, rng), emb);
  for (std::size_t k = 0; k < 3; ++k) CHECK(meta.database_size(k) == 1);
  for (std::size_t e = 1; e < 30; ++e) meta.update(e, std::vector<double>{0.0}, random_params(1, rng), uniform_vec(6, rng));
  for (std::size_t k = 0; k < 3; ++k) CHECK(meta.database_size(k) == 30);

  // The first outcome is found through the third module's projection.
  auto m = meta.nearest(2, std::vector<double>{0.0}, std::vector<double>{0.5, 0.6});
  CHECK(m.episode == 0);
  auto key = meta.key(2, m.record);
  CHECK(std::vector<double>(key.begin(), key.end()) == std::vector<double>{0.0, 0.5, 0.6});
}

TEST_CASE("noise is clipped and seeded") {
  MetaPolicy meta({{0}}, 0, 0.5);
  meta.update(0, {}, DmpParams(std::vector<double>(8, 0.99)), std::vector<double>{0.0});
  Rng a(6), b(6);
  for (int i = 0; i < 200; ++i) {
    auto p = meta.infer(0, {}, std::vector<double>{0.0}, a);
    CHECK(p == meta.infer(0, {}, std::vector<double>{0.0}, b));
    for (double v : p.values()) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("errors") {
  MetaPolicy meta({{0}}, 1, 0.0);
  Rng rng(7);
  CHECK_THROWS_AS(meta.nearest(0, std::vector<double>{0.0}, std::vector<double>{0.0}), StateError);
  CHECK_THROWS_AS(meta.update(0, std::vector<double>{}, random_params(1, rng), std::vector<double>{0.0}),
                  ArgumentError);
  meta.update(3, std::vector<double>{0.0}, random_params(1, rng), std::vector<double>{0.0});
  CHECK_THROWS_AS(meta.update(3, std::vector<double>{0.0}, random_params(1, rng), std::vector<double>{0.0}),
                  ArgumentError);
  CHECK_THROWS_AS(MetaPolicy({}, 0, 0.0), ArgumentError);
}

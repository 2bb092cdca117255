#include <benchmark/benchmark.h>

#include "imgep/dmp.hpp"
#include "imgep/env.hpp"
#include "imgep/meta_policy.hpp"
#include "imgep/render.hpp"
#include "imgep/tensor/ops.hpp"

using namespace imgep;
using namespace imgep::tensor;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

// Encoder's first layer at desk scale: 64x64 input, 4x4 kernel, stride 2.
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  auto x = random_tensor<float>({batch, 1, 64, 64}, rng);
  auto k = random_tensor<float>({16, 1, 4, 4}, rng);
  auto b = random_tensor<float>({16}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, k, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  auto x = random_tensor<float>({64, 16, 32, 32}, rng);
  auto k = random_tensor<float>({16, 16, 4, 4}, rng);
  auto b = random_tensor<float>({16}, rng);
  auto y = conv2d_forward(x, k, b);
  auto gy = random_tensor<float>(y.shape(), rng);
  for (auto _ : state) {
    Tensor<float> gx(x.shape()), gk(k.shape()), gb(b.shape());
    conv2d_backward(x, k, gy, Conv2dSpec{}, &gx, &gk, &gb);
    benchmark::DoNotOptimize(gk.values().data());
  }
}
BENCHMARK(BM_Conv2dBackward);

void BM_ConvTranspose2dForward(benchmark::State& state) {
  Rng rng(3);
  auto x = random_tensor<float>({64, 16, 32, 32}, rng);
  auto k = random_tensor<float>({16, 1, 4, 4}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv_transpose2d_forward(x, k, Tensor<float>()));
}
BENCHMARK(BM_ConvTranspose2dForward);

void BM_Rollout(benchmark::State& state) {
  const auto env = state.range(0) ? EnvConfig::arm_two_balls() : EnvConfig::arm_ball();
  const auto dmp = DmpConfig::standard(env.episode_steps);
  const auto scene = initial_scene(env);
  Rng rng(4);
  auto params = random_params(env.n_joints, rng);
  for (auto _ : state) {
    auto traj = integrate(params, scene.joint_angles, dmp, env);
    benchmark::DoNotOptimize(rollout(env, traj, scene, rng));
  }
}
BENCHMARK(BM_Rollout)->Arg(0)->Arg(1);

void BM_Render(benchmark::State& state) {
  const auto env = EnvConfig::arm_two_balls();
  RenderConfig cfg;
  cfg.arm_rendered = state.range(0) != 0;
  const auto scene = initial_scene(env);
  for (auto _ : state) benchmark::DoNotOptimize(render(scene, env.link_lengths, cfg));
}
BENCHMARK(BM_Render)->Arg(0)->Arg(1);

// Database size at the end of a 5000-episode run, ArmBall engineered goals.
void BM_NearestNeighbour(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  MetaPolicy meta({{0, 1, 2, 3}}, 4, 0.05);
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ctx(4), goal(4);
  for (std::size_t e = 0; e < n; ++e) {
    for (auto& v : ctx) v = u(rng);
    for (auto& v : goal) v = u(rng);
    meta.update(e, ctx, random_params(6, rng), goal);
  }
  for (auto _ : state) {
    for (auto& v : goal) v = u(rng);
    benchmark::DoNotOptimize(meta.nearest(0, ctx, goal));
  }
}
BENCHMARK(BM_NearestNeighbour)->Arg(200)->Arg(5000);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "momoc/encoding.hpp"
#include "momoc/fft.hpp"
#include "momoc/metrics.hpp"
#include "momoc/motion.hpp"
#include "momoc/phantom.hpp"
#include "momoc/pmas.hpp"
#include "momoc/recon.hpp"
#include "momoc/rigid.hpp"
#include "momoc/sampling.hpp"
#include "momoc/wavelet.hpp"

namespace {

using namespace momoc;

Dims cube(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  return {n, n, n};
}

ComplexVolume phantom(const Dims& d) { return to_complex(make_phantom(PhantomKind::kShepp3d, d)); }

void BM_Fft3(benchmark::State& state) {
  auto v = phantom(cube(state));
  for (auto _ : state) {
    auto k = fft3_centered(v);
    benchmark::DoNotOptimize(k.data());
  }
}
BENCHMARK(BM_Fft3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ApplyRigid(benchmark::State& state) {
  const auto v = phantom(cube(state));
  RigidParams p;
  p.rot_deg = {3.0, -2.0, 5.0};
  p.trans_vox = {1.5, 0.0, -2.0};
  for (auto _ : state) {
    auto out = apply_rigid(v, p);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ApplyRigid)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Haar3(benchmark::State& state) {
  const auto v = phantom(cube(state));
  for (auto _ : state) {
    auto w = wavelet_l1(v);
    benchmark::DoNotOptimize(w.value);
  }
}
BENCHMARK(BM_Haar3)->Arg(64)->Unit(benchmark::kMillisecond);

struct ShotSetup {
  Dims d;
  ComplexVolume x;
  CoilSet coils;
  SamplingPlan plan;
  RigidParams pose;
  ShotSamples y;

  explicit ShotSetup(std::size_t n, std::size_t n_coils = 4)
      : d{n, n, n},
        x(phantom(d)),
        coils(make_coil_maps(d, n_coils)),
        plan(generate_plan(n, n, 2.0, 8, 8, 1.0, 8, 1)) {
    pose.rot_deg = {2.0, 0.0, -1.0};
    pose.trans_vox = {1.0, 0.5, 0.0};
    y = encode_shot(x, coils, plan, 3, RigidParams{});
  }
};

void BM_EncodeShot(benchmark::State& state) {
  ShotSetup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = encode_shot(s.x, s.coils, s.plan, 3, s.pose);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_EncodeShot)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AdjointShot(benchmark::State& state) {
  ShotSetup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = adjoint_shot(s.y, s.coils, s.plan, 3, s.pose);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_AdjointShot)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ShotMotionGradient(benchmark::State& state) {
  ShotSetup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto g = detail::shot_motion_gradient(s.x, s.y, s.coils, s.plan, 3, s.pose);
    benchmark::DoNotOptimize(g.loss);
  }
}
BENCHMARK(BM_ShotMotionGradient)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ReconL1(benchmark::State& state) {
  const Dims d = cube(state);
  const auto truth = make_phantom(PhantomKind::kShepp3d, d);
  const auto coils = make_coil_maps(d, 4);
  const auto plan = generate_plan(d.ny, d.nz, 2.0, 8, 8, 1.0, 8, 1);
  const auto ksp = corrupt(to_complex(truth), coils, plan, MotionTrajectory::zeros(8));
  ReconConfig cfg;
  cfg.l1_steps = 10;
  for (auto _ : state) {
    auto x = recon_l1(ksp, coils, plan, MotionTrajectory::zeros(8), cfg);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ReconL1)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const Dims d = cube(state);
  const auto a = make_phantom(PhantomKind::kBlobs, d, 1);
  const auto b = make_phantom(PhantomKind::kBlobs, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Tenengrad(benchmark::State& state) {
  const auto a = make_phantom(PhantomKind::kBlobs, cube(state), 1);
  for (auto _ : state) benchmark::DoNotOptimize(tenengrad(a));
}
BENCHMARK(BM_Tenengrad)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FitBt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> beta(n);
  for (auto& b : beta) b = g(rng);
  std::vector<ComparisonRecord> recs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ComparisonRecord r;
      r.item_a = "i" + std::to_string(i);
      r.item_b = "i" + std::to_string(j);
      const double p = 1.0 / (1.0 + std::exp(beta[j] - beta[i]));
      r.outcomes = {u(rng) < p ? Outcome::kAWorse : Outcome::kBWorse};
      r.annotator = "bench";
      recs.push_back(r);
    }
  for (auto _ : state) {
    auto s = fit_bt(recs);
    benchmark::DoNotOptimize(s.iterations);
  }
}
BENCHMARK(BM_FitBt)->Arg(24)->Arg(96)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

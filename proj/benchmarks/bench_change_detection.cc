#include <limits>

#include <benchmark/benchmark.h>

#include "scd/change_detection.h"
#include "scd/rng.h"

namespace {

void BM_PNormDistance(benchmark::State &state) {
  scd::Rng rng(1);
  Eigen::VectorXd a(200), b(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    a(i) = -rng.Uniform(0, 27);
    b(i) = -rng.Uniform(0, 27);
  }
  const double p = state.range(0) == 0 ? scd::kInfNorm : static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(scd::PNormDistance(a, b, p));
}
BENCHMARK(BM_PNormDistance)->Arg(1)->Arg(2)->Arg(8)->Arg(0);

// 15 minutes of super-frames against 200 speakers, 1 s intervals.
void BM_IntervalMeansAndDetect(benchmark::State &state) {
  scd::Rng rng(2);
  scd::LikelihoodSequence seq;
  seq.frame_hop_s = 0.03;
  seq.frame_win_s = 0.1;
  seq.rows.resize(30000, 200);
  for (Eigen::Index i = 0; i < seq.rows.size(); ++i) seq.rows.data()[i] = -rng.Uniform(0, 27);
  scd::ScdConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scd::Detect(scd::IntervalMeans(seq, cfg), cfg, 30.0));
  }
}
BENCHMARK(BM_IntervalMeansAndDetect)->Unit(benchmark::kMillisecond);

}  // namespace

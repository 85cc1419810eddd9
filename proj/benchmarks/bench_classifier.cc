#include <vector>

#include <benchmark/benchmark.h>

#include "scd/classifier.h"
#include "scd/rng.h"

namespace {

struct Batch {
  scd::RowMatrix x;
  Eigen::MatrixXd y;
};

Batch MakeBatch(int rows, int k) {
  scd::Rng rng(3);
  Batch b{scd::RowMatrix(rows, 390), Eigen::MatrixXd::Zero(rows, k)};
  for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = rng.Normal();
  for (int r = 0; r < rows; ++r) b.y(r, static_cast<Eigen::Index>(rng.Below(k))) = 1.0;
  return b;
}

// Desk-scale shape: 390 inputs, 200 hidden units, 20 speakers.
void BM_CostAndGradient(benchmark::State &state) {
  const int rows = static_cast<int>(state.range(0));
  const Batch b = MakeBatch(rows, 20);
  scd::NetworkShape shape;
  shape.layer_sizes = {390, 200, 20};
  const scd::Model model = scd::InitWeights(shape, 1);
  std::vector<Eigen::MatrixXd> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scd::CostAndGradient(model, b.x, b.y, 0.3, &grad));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_CostAndGradient)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Transform(benchmark::State &state) {
  const Batch b = MakeBatch(3000, 200);
  scd::NetworkShape shape;
  shape.layer_sizes = {390, 200, 200};
  const scd::Model model = scd::InitWeights(shape, 1);
  scd::FeatureSequence seq{b.x, 0.03, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(scd::Transform(model, seq));
  state.SetItemsProcessed(state.iterations() * 3000);
}
BENCHMARK(BM_Transform)->Unit(benchmark::kMillisecond);

}  // namespace

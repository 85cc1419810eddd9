#include <benchmark/benchmark.h>

#include "scd/features.h"
#include "scd/synth_voice.h"
#include "scd/vad.h"

namespace {

const scd::AudioClip &Speech() {
  static const scd::AudioClip clip =
      scd::SynthesizeUtterance(scd::DrawVoices(1, 1)[0], 7, 4.0);
  return clip;
}

void BM_DetectVoiced(benchmark::State &state) {
  const scd::VadConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(scd::DetectVoiced(Speech(), cfg));
  state.SetItemsProcessed(state.iterations() * Speech().samples.size());
}
BENCHMARK(BM_DetectVoiced)->Unit(benchmark::kMillisecond);

void BM_Mfcc(benchmark::State &state) {
  const scd::MfccConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(scd::Mfcc(Speech(), cfg));
  state.SetItemsProcessed(state.iterations() * Speech().samples.size());
}
BENCHMARK(BM_Mfcc)->Unit(benchmark::kMillisecond);

void BM_DeltasCmvnConcat(benchmark::State &state) {
  const scd::FeatureSequence mfcc = scd::Mfcc(Speech(), scd::MfccConfig{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(scd::ConcatFrames(scd::Cmvn(scd::AddDeltas(mfcc, 2))));
  }
}
BENCHMARK(BM_DeltasCmvnConcat)->Unit(benchmark::kMicrosecond);

}  // namespace

#include <benchmark/benchmark.h>

#include "starris/ao_driver.hpp"
#include "starris/beamforming.hpp"
#include "starris/channel.hpp"
#include "starris/oracle.hpp"
#include "starris/phase_shift.hpp"

using namespace starris;

namespace {

SystemInstance Make(int K, int M, int N, std::uint64_t seed = 1) {
  SystemInstance inst;
  inst.dims = {K, M, N};
  inst.power.p_max_watts = DbmToWatt(40.0);
  inst.power.static_power_watts = DbmToWatt(5.0);
  inst.power.noise_power_watts = DbmToWatt(-20.0);
  inst.channels = GenerateInstance(seed, inst.dims, Geometry::Circle(K), PathLossModel{});
  return inst;
}

void BM_BeamformingSdpSolve(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const SystemInstance inst = Make(K, 4, 8);
  const StarCoefficients phi = StarCoefficients::Uniform(8);
  const LiftedBeamformers V = MrtInitialization(inst, phi);
  const BeamformingSdp sdp = BuildBeamformingSdp(0.0, phi, inst, V);
  for (auto _ : state) benchmark::DoNotOptimize(SolveConic(sdp.problem));
}
BENCHMARK(BM_BeamformingSdpSolve)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Dinkelbach(benchmark::State& state) {
  const SystemInstance inst = Make(4, 4, 8);
  const StarCoefficients phi = StarCoefficients::Uniform(8);
  const LiftedBeamformers V = MrtInitialization(inst, phi);
  for (auto _ : state) benchmark::DoNotOptimize(DinkelbachBeamforming(inst, phi, V));
}
BENCHMARK(BM_Dinkelbach)->Unit(benchmark::kMillisecond);

void BM_SequentialRelaxation(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const SystemInstance inst = Make(4, 4, N);
  const StarCoefficients phi = StarCoefficients::Uniform(N);
  const DinkelbachResult d = DinkelbachBeamforming(inst, phi, MrtInitialization(inst, phi));
  const ExtractionResult e = ExtractBeamformers(d.V, inst, phi);
  const ElementLayout layout = MakeLayout(RisMode::kStarEs, N);
  for (auto _ : state)
    benchmark::DoNotOptimize(SequentialRelaxation(inst, e.beamformers, e.min_ee, phi, layout));
}
BENCHMARK(BM_SequentialRelaxation)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_AlternatingOptimize(benchmark::State& state) {
  const SystemInstance inst = Make(2, 2, 4);
  AoConfig cfg;
  cfg.starts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(AlternatingOptimize(inst, cfg));
}
BENCHMARK(BM_AlternatingOptimize)->Unit(benchmark::kMillisecond);

void BM_OracleTiny(benchmark::State& state) {
  const SystemInstance inst = Make(2, 1, 2);
  GridSpec grid;
  grid.phase_points = 8;
  grid.beta_step = 0.1;
  grid.power_points = 100;
  for (auto _ : state) benchmark::DoNotOptimize(OracleGridSearch(inst, grid));
}
BENCHMARK(BM_OracleTiny)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Plan an array, then let the controller find the same operating point on
// the analytic model and on the simulator.

#include <cstdio>

#include "hacache/hacache.hpp"

int main() {
  using namespace hacache;

  const auto array = preset_topology("1A-3B");
  const auto b_max = array.backend_bandwidth(devices::k128K);
  const double c_max = array.cache_bandwidth(devices::k128K);

  const auto plan = plan_optimal(b_max, c_max);
  std::printf("planner: T*=%.1f MB/s  S=%.1f MB/s  rho=", plan.t_star, plan.aggregate());
  for (double r : plan.rho) std::printf(" %.3f", r);
  std::printf("\n");

  AnalyticEnv model(b_max, c_max, HitProfile::uniform(4, 1.0));
  Controller ctl(model, ControllerParams{});
  const auto rep = ctl.run_two_phase(1000);
  model.apply(ctl.state().P);
  std::printf("model:   S=%.1f MB/s after %zu cycles\n", model.measure().system, rep.cycles);

  ScenarioConfig cfg;
  cfg.topology = "1A-3B";
  cfg.io_range = std::uint64_t{4} << 30;
  cfg.window_ms = 200;
  cfg.settle_ms = 50;
  const auto run = cmd_run(cfg);
  std::printf("sim:     S=%.1f MB/s  utilization=%.3f  converged=%d  cycles=%zu\n", run.summary.S,
              run.summary.utilization(), run.summary.converged ? 1 : 0, run.summary.cycles);
  return 0;
}

// Two categories started at 5 and 10 under each categorization regime,
// integrated with the field model. Usage: demo_regimes [horizon]

#include <cstdio>
#include <cstdlib>

#include "exdyn/exdyn.hpp"

int main(int argc, char** argv) {
  using namespace exdyn;
  const double horizon = argc > 1 ? std::atof(argv[1]) : 100.0;
  struct Case {
    const char* name;
    Regime regime;
    double p;
  };
  const Case cases[] = {{"no competition", Regime::NoCompetition, 1.0},
                        {"pure competition, p=1", Regime::PureCompetition, 1.0},
                        {"pure competition, p=1.5", Regime::PureCompetition, 1.5},
                        {"discards, p=1", Regime::CompetitionWithDiscards, 1.0}};
  for (const auto& c : cases) {
    ModelParams p;
    p.rates = {1000.0, 1000.0};
    p.w0 = 1e-3;
    p.regime = c.regime;
    p.p = c.p;
    FieldEngine<1> eng(p, {"A", "B"}, Grid<1>{{-25.0}, {35.0}, {1024}});
    eng.seed_point(0, {5.0}, 0.05);
    eng.seed_point(1, {10.0}, 0.05);
    const Trajectory t = eng.integrate({horizon, horizon / 10.0, {}});
    const auto v = merger_verdict(t, horizon / 2.0, horizon);
    const std::size_t last = t.times.size() - 1;
    std::printf("%-24s mean A %7.3f  mean B %7.3f  verdict %s\n", c.name, t.series[0].mean[last],
                t.series[1].mean[last], v.name().c_str());
  }
}

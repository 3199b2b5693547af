// One category started at y = 10 relaxes toward the lenition equilibrium.
// Prints the exemplar model (one realization) next to the field model.

#include <cstdio>

#include "exdyn/exdyn.hpp"

int main() {
  using namespace exdyn;
  ModelParams p;
  p.lambda = 1.0;
  p.rates = {100.0};
  p.w0 = 0.01;
  p.alpha = 0.0;
  p.beta = 0.1;
  p.sigma = 1.0;
  p.prune_ratio = 1e-3;

  const RunConfig cfg{20.0, 2.0, {}};

  ExemplarEngine<1> ex(p, {"A"}, 7);
  ex.seed_category(0, {10.0}, 100);
  const Trajectory a = ex.run(cfg);

  FieldEngine<1> field(p, {"A"}, Grid<1>{{-25.0}, {35.0}, {1024}});
  field.seed_point(0, {10.0}, 1.0);
  const Trajectory b = field.integrate(cfg);

  std::printf("equilibrium dispersion %.5f\n", equilibrium_dispersion(p.alpha, p.beta, p.sigma));
  std::printf("%6s  %10s %10s  %10s %10s\n", "t", "ex.mean", "ex.disp", "field.mean", "field.disp");
  for (std::size_t i = 0; i < a.times.size(); ++i)
    std::printf("%6.1f  %10.4f %10.4f  %10.4f %10.4f\n", a.times[i], a.series[0].mean[i],
                a.series[0].dispersion[i], b.series[0].mean[i], b.series[0].dispersion[i]);
}

#pragma once

#include <string>

namespace acceptance {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict percolation_oracle();
Verdict static_crossover();
Verdict adaptation_convergence();
Verdict spatial_adaptation();
Verdict girvan_newman();
Verdict kemeny_oracle();
Verdict qubit_fairness();
Verdict fifo_discipline();
Verdict determinism();
Verdict whole_network();

}  // namespace acceptance

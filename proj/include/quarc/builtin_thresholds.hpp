#pragma once

#include "quarc/thresholds.hpp"

namespace quarc {

/// Grid-derived thresholds frozen from `quarc_sim calibrate-grid` runs on 8x8
/// and 16x16 grids (unit widths, 4 qubits per node, q = 0.9, 10 replications).
inline ThresholdTable builtin_grid_thresholds() {
  SizeThresholds g8;
  g8.network_size = 64;
  g8.split = {{16.0, 0.9479592770287157}, {64.0, 0.3919278581765556}};
  g8.merge = {{4.0, 0.8705842857036267}, {16.0, 0.5791977318412946}, {64.0, 0.3919278581765556}};

  SizeThresholds g16;
  g16.network_size = 256;
  g16.split = {{16.0, 0.9926352594376573}, {64.0, 0.9317139917744616}, {256.0, 0.4112620289855072}};
  g16.merge = {{4.0, 0.9603804178596678},
               {16.0, 0.8833417225583431},
               {64.0, 0.6175400212363529},
               {256.0, 0.4112620289855072}};
  return ThresholdTable({g8, g16});
}

}  // namespace quarc

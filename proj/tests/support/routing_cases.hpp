#pragma once

#include <vector>

#include "entroute/types.hpp"

namespace fixture {

// Expected modes with k = 0.07 and s_h_threshold = 32 under the full rule and the two
// rule-changing ablations.
struct AblationCase {
  double s_h, v_sp, a_vnr;
  entroute::Mode full, without_s_h, without_vnr;
};

inline const std::vector<AblationCase>& ablation_table() {
  using entroute::Mode;
  static const std::vector<AblationCase> rows{
      {10.0, -0.5, 1.0, Mode::CoT, Mode::CoT, Mode::CoT},
      {40.0, 0.05, 1.0, Mode::Direct, Mode::Standard, Mode::Direct},
      {10.0, 0.05, 1.0, Mode::Standard, Mode::Standard, Mode::Standard},
      {10.0, 0.5, 1.0, Mode::Direct, Mode::Direct, Mode::Direct},
      {10.0, 0.05, 0.5, Mode::Direct, Mode::Direct, Mode::Standard},
      {10.0, -0.05, 0.5, Mode::CoT, Mode::CoT, Mode::Standard},
      {10.0, 0.1, 2.0, Mode::Standard, Mode::Standard, Mode::Direct},
      {10.0, -0.1, 2.0, Mode::Standard, Mode::Standard, Mode::CoT},
      {40.0, -0.1, 2.0, Mode::Standard, Mode::Standard, Mode::CoT},
      {40.0, 0.1, 2.0, Mode::Direct, Mode::Standard, Mode::Direct},
      {32.0, 0.05, 1.0, Mode::Standard, Mode::Standard, Mode::Standard},
      {32.5, 0.01, 1.0, Mode::Direct, Mode::Standard, Mode::Direct},
      {50.0, 0.0, 1.0, Mode::Standard, Mode::Standard, Mode::Standard},
      {50.0, -0.5, 1.0, Mode::CoT, Mode::CoT, Mode::CoT},
      {5.0, 0.07, 1.0, Mode::Standard, Mode::Standard, Mode::Standard},
      {5.0, -0.02, 0.1, Mode::CoT, Mode::CoT, Mode::Standard},
      {5.0, 0.3, 5.0, Mode::Standard, Mode::Standard, Mode::Direct},
      {45.0, 0.3, 5.0, Mode::Direct, Mode::Standard, Mode::Direct},
      {5.0, -0.3, 5.0, Mode::Standard, Mode::Standard, Mode::CoT},
      {5.0, 0.2, 0.0, Mode::Direct, Mode::Direct, Mode::Direct},
  };
  return rows;
}

}  // namespace fixture

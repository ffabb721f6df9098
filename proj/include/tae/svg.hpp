#pragma once

#include <string>
#include <vector>

#include "tae/scenario.hpp"

namespace tae {

// World-frame futures to draw for one agent.
struct SvgAgentTrajs {
  int agent_id = 0;
  std::vector<std::vector<Pt>> generated;
};

// Dependency-free vector plot of one scenario: lanes in grey, observed tracks
// in dark grey, reference futures in red, generated futures in green. Output
// is deterministic for equal inputs.
std::string scenario_svg(const Scenario& s, const std::vector<SvgAgentTrajs>& generated);

}  // namespace tae

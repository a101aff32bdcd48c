#pragma once

#include "quasilab/freqcond.hpp"
#include "quasilab/potential.hpp"

#include <memory>

namespace fixtures {

using namespace quasilab;

/// d = 2 step potential for tau = (2, 3): a height-2 box of area 1/4 and a
/// disjoint height-5 box of area 1/100 < 1/36, so M_tau = 2 and |E(M_tau)| = 1/100.
inline potential::PotentialSpec two_box_step() {
    return potential::PotentialSpec(
        2, potential::StepSum{{potential::IndicatorBox{{0.0, 0.0}, {0.5, 0.5}, 2.0},
                               potential::IndicatorBox{{0.6, 0.6}, {0.1, 0.1}, 5.0}}});
}

/// alpha_1 = [0; 2, N, 1, 1, ...], alpha_2 = [0; 3, N, 1, 1, ...] with N = 10^4,
/// so ||2 alpha_1|| and ||3 alpha_2|| are of order 1/N.
inline freqcond::FrequencyVector near_half_third() {
    auto tail = std::make_shared<const contfrac::QuotientRule>(contfrac::constant_rule(1));
    return freqcond::FrequencyVector({contfrac::Frequency(contfrac::explicit_rule({2, 10000}, tail), 60),
                                      contfrac::Frequency(contfrac::explicit_rule({3, 10000}, tail), 60)});
}

} // namespace fixtures

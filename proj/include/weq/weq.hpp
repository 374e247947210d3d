#pragma once

// Convenience umbrella: everything needed to compute two-particle
// arrival-time observables and their spin-dependent counterparts.

#include "core.hpp"          // IWYU pragma: export
#include "wavepacket.hpp"    // IWYU pragma: export
#include "quadrature.hpp"    // IWYU pragma: export
#include "one_body.hpp"      // IWYU pragma: export
#include "arrival.hpp"       // IWYU pragma: export
#include "spin_current.hpp"  // IWYU pragma: export
#include "oracle.hpp"        // IWYU pragma: export

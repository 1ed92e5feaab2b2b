// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_GMORTON_HPP
#define GMORTON_GMORTON_HPP

#include "gmorton/bits.hpp"
#include "gmorton/cache_spec.hpp"
#include "gmorton/cachesim.hpp"
#include "gmorton/evolve.hpp"
#include "gmorton/fitness.hpp"
#include "gmorton/hierarchy.hpp"
#include "gmorton/layout.hpp"
#include "gmorton/patterns.hpp"
#include "gmorton/rng.hpp"

#endif  // GMORTON_GMORTON_HPP

#pragma once

// Umbrella header: everything needed to decide, synthesize, verify and
// simulate LOCC conversions between bipartite pure states.

#include "locc/complex_matrix.hpp"
#include "locc/decompositions.hpp"
#include "locc/errors.hpp"
#include "locc/majorization.hpp"
#include "locc/protocol.hpp"
#include "locc/rng.hpp"
#include "locc/states.hpp"
#include "locc/verify.hpp"

#pragma once

#include "rrw/backward.hpp"
#include "rrw/diagnostics.hpp"
#include "rrw/error.hpp"
#include "rrw/evidence.hpp"
#include "rrw/exact_1d.hpp"
#include "rrw/families.hpp"
#include "rrw/lattice.hpp"
#include "rrw/measures.hpp"
#include "rrw/parallel.hpp"
#include "rrw/rng.hpp"
#include "rrw/subordinator.hpp"
#include "rrw/walk.hpp"

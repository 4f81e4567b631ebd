#pragma once

#include "units.hpp"
#include "composite.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "analytic.hpp"
#include "pulse.hpp"
#include "evolve.hpp"
#include "gates.hpp"
#include "chain.hpp"

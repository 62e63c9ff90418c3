#pragma once

#include "fso/error.hpp"
#include "fso/model.hpp"
#include "fso/ode.hpp"
#include "fso/integrator.hpp"
#include "fso/exact_crossing.hpp"
#include "fso/slow_manifold.hpp"
#include "fso/asymptotic_maps.hpp"
#include "fso/validation.hpp"
#include "fso/experiments.hpp"

#pragma once

// Umbrella header for the polynomial-entropy laboratory.

#include "hpol/alpha.hpp"
#include "hpol/config.hpp"
#include "hpol/defaults.hpp"
#include "hpol/distance.hpp"
#include "hpol/errors.hpp"
#include "hpol/experiments.hpp"
#include "hpol/geom.hpp"
#include "hpol/grid.hpp"
#include "hpol/homology.hpp"
#include "hpol/integrate.hpp"
#include "hpol/io.hpp"
#include "hpol/level_curve.hpp"
#include "hpol/measure.hpp"
#include "hpol/model.hpp"
#include "hpol/packing.hpp"
#include "hpol/probes.hpp"
#include "hpol/section.hpp"
#include "hpol/semicontinuity.hpp"
#include "hpol/simplex.hpp"
#include "hpol/slope.hpp"
#include "hpol/theta_section.hpp"
#include "hpol/torus.hpp"
#include "hpol/witness.hpp"

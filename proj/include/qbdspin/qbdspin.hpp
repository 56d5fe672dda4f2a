#pragma once

#include "qbdspin/error.hpp"
#include "qbdspin/vec3.hpp"
#include "qbdspin/rng.hpp"
#include "qbdspin/kernel.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/coupling.hpp"
#include "qbdspin/model.hpp"
#include "qbdspin/stats.hpp"
#include "qbdspin/montecarlo.hpp"
#include "qbdspin/criticality.hpp"
#include "qbdspin/spinwave.hpp"
#include "qbdspin/dynamics.hpp"
#include "qbdspin/parallel.hpp"
#include "qbdspin/serialize.hpp"

#pragma once

#include "meshrelay/behavior.hpp"
#include "meshrelay/geometry.hpp"
#include "meshrelay/logging.hpp"
#include "meshrelay/mesh.hpp"
#include "meshrelay/nsb.hpp"
#include "meshrelay/rng.hpp"
#include "meshrelay/run.hpp"
#include "meshrelay/scenario.hpp"
#include "meshrelay/sim.hpp"
#include "meshrelay/unicycle.hpp"
#include "meshrelay/world.hpp"

#pragma once

#include "sphereot/bench.hpp"
#include "sphereot/circular.hpp"
#include "sphereot/common.hpp"
#include "sphereot/dssw.hpp"
#include "sphereot/flows.hpp"
#include "sphereot/sphere.hpp"
#include "sphereot/stiefel.hpp"
#include "sphereot/weighting.hpp"

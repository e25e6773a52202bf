#pragma once

// Umbrella header for the ridgekit library.

#include "ridgekit/augment.hpp"
#include "ridgekit/csv.hpp"
#include "ridgekit/cv.hpp"
#include "ridgekit/dataset.hpp"
#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"
#include "ridgekit/experiments.hpp"
#include "ridgekit/glm.hpp"
#include "ridgekit/kernel.hpp"
#include "ridgekit/lowrank.hpp"
#include "ridgekit/parallel.hpp"
#include "ridgekit/ridge.hpp"
#include "ridgekit/rng.hpp"
#include "ridgekit/spline.hpp"

#pragma once

#include "vline/errors.hpp"
#include "vline/experiment.hpp"
#include "vline/gegenbauer.hpp"
#include "vline/grid.hpp"
#include "vline/io.hpp"
#include "vline/opnorm.hpp"
#include "vline/parallel.hpp"
#include "vline/phantom.hpp"
#include "vline/solver.hpp"
#include "vline/spectral.hpp"
#include "vline/transform.hpp"
#include "vline/weight.hpp"

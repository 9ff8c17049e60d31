#pragma once

#include "stencil_lab/errors.hpp"
#include "stencil_lab/core.hpp"
#include "stencil_lab/random.hpp"
#include "stencil_lab/fourier.hpp"
#include "stencil_lab/training.hpp"
#include "stencil_lab/regression.hpp"
#include "stencil_lab/solvers.hpp"
#include "stencil_lab/simulate.hpp"
#include "stencil_lab/analysis.hpp"
#include "stencil_lab/io.hpp"
#include "stencil_lab/experiments.hpp"

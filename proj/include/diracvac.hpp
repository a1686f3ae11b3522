#pragma once

#include "diracvac/errors.hpp"
#include "diracvac/model.hpp"
#include "diracvac/quadrature.hpp"
#include "diracvac/potential.hpp"
#include "diracvac/spectral.hpp"
#include "diracvac/numerics.hpp"
#include "diracvac/holetheory.hpp"
#include "diracvac/qftvacuum.hpp"

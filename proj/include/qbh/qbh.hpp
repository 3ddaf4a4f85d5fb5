#pragma once

#include "bloch.hpp"
#include "correlations.hpp"
#include "gaussian.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "model_io.hpp"
#include "oracle.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "stability.hpp"
#include "types.hpp"

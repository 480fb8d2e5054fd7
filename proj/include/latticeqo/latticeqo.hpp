#pragma once

#include "latticeqo/calibration.hpp"
#include "latticeqo/dynamics.hpp"
#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"
#include "latticeqo/lattice.hpp"
#include "latticeqo/observables.hpp"
#include "latticeqo/spectrum.hpp"

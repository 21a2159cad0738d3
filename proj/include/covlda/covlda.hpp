#pragma once

// Umbrella header for the library (the CLI wiring lives in covlda/cli.hpp).

#include "covlda/analysis.hpp"
#include "covlda/density.hpp"
#include "covlda/errors.hpp"
#include "covlda/inference.hpp"
#include "covlda/io.hpp"
#include "covlda/matrix.hpp"
#include "covlda/rng.hpp"
#include "covlda/samplers.hpp"
#include "covlda/simgen.hpp"
#include "covlda/slice.hpp"
#include "covlda/state.hpp"
#include "covlda/types.hpp"
#include "covlda/vanilla.hpp"

#pragma once

#include "rwre/core.hpp"
#include "rwre/engine/cache.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/manifest.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"
#include "rwre/harmonic.hpp"
#include "rwre/io.hpp"
#include "rwre/lmgf_rate.hpp"
#include "rwre/measures.hpp"
#include "rwre/oracle.hpp"
#include "rwre/rare_event.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/tilt.hpp"
#include "rwre/walk.hpp"

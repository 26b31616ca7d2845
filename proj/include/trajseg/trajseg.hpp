#pragma once

// Convenience include for the whole library.

#include "trajseg/analytics.hpp"
#include "trajseg/core.hpp"
#include "trajseg/em.hpp"
#include "trajseg/hmm.hpp"
#include "trajseg/io.hpp"
#include "trajseg/lds.hpp"
#include "trajseg/mathutil.hpp"
#include "trajseg/metrics.hpp"
#include "trajseg/parallel.hpp"
#include "trajseg/pipeline.hpp"
#include "trajseg/rdp.hpp"
#include "trajseg/rng.hpp"
#include "trajseg/synth.hpp"

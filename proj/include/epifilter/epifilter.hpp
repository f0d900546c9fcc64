#pragma once

// Umbrella header: pulls in the whole library.

#include "epifilter/assimilation.hpp"
#include "epifilter/cli.hpp"
#include "epifilter/compartments.hpp"
#include "epifilter/config.hpp"
#include "epifilter/covariance.hpp"
#include "epifilter/date.hpp"
#include "epifilter/errors.hpp"
#include "epifilter/ingest.hpp"
#include "epifilter/linalg.hpp"
#include "epifilter/log.hpp"
#include "epifilter/metrics.hpp"
#include "epifilter/optimize.hpp"
#include "epifilter/rng.hpp"

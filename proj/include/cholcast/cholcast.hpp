#pragma once

// Convenience include for the whole library.

#include "baseline.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "cv.hpp"
#include "featurex.hpp"
#include "gbtree.hpp"
#include "ingest.hpp"
#include "pipeline.hpp"
#include "prep.hpp"
#include "rng.hpp"
#include "select.hpp"
#include "simulate.hpp"
#include "stats_tests.hpp"
#include "tpe.hpp"

#pragma once

#include "overlap_sketch/batch.hpp"
#include "overlap_sketch/errors.hpp"
#include "overlap_sketch/estimators.hpp"
#include "overlap_sketch/hashing.hpp"
#include "overlap_sketch/likelihood.hpp"
#include "overlap_sketch/log_math.hpp"
#include "overlap_sketch/minhash.hpp"
#include "overlap_sketch/parallel.hpp"
#include "overlap_sketch/planner.hpp"
#include "overlap_sketch/report_io.hpp"
#include "overlap_sketch/simharness.hpp"
#include "overlap_sketch/sketch_io.hpp"
#include "overlap_sketch/types.hpp"

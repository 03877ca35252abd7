#ifndef SKLAB_SKLAB_HPP
#define SKLAB_SKLAB_HPP

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/io.hpp"
#include "sklab/lcp.hpp"
#include "sklab/lp.hpp"
#include "sklab/nnls.hpp"
#include "sklab/pipeline.hpp"
#include "sklab/rng.hpp"
#include "sklab/simulate.hpp"
#include "sklab/skorokhod.hpp"
#include "sklab/stationary.hpp"
#include "sklab/stats.hpp"
#include "sklab/types.hpp"
#include "sklab/verify.hpp"

#endif  // SKLAB_SKLAB_HPP

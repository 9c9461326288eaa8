#ifndef MFOC_MFOC_HPP
#define MFOC_MFOC_HPP

#include "mfoc/types.hpp"
#include "mfoc/grid.hpp"
#include "mfoc/distribution.hpp"
#include "mfoc/markov.hpp"
#include "mfoc/hjb.hpp"
#include "mfoc/fp.hpp"
#include "mfoc/costs.hpp"
#include "mfoc/solver.hpp"
#include "mfoc/regularize.hpp"

#endif  // MFOC_MFOC_HPP

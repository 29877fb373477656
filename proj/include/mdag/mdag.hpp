#ifndef MDAG_MDAG_HPP
#define MDAG_MDAG_HPP

#include "bayes.hpp"
#include "data.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "model.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "search.hpp"
#include "stats.hpp"

#endif  // MDAG_MDAG_HPP

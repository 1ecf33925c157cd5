#pragma once

#include "pooltest/codec.hpp"
#include "pooltest/core.hpp"
#include "pooltest/enumeration.hpp"
#include "pooltest/errors.hpp"
#include "pooltest/heuristics.hpp"
#include "pooltest/optimizer.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/random.hpp"
#include "pooltest/scalar.hpp"
#include "pooltest/session.hpp"
#include "pooltest/split_graph.hpp"
#include "pooltest/zones.hpp"

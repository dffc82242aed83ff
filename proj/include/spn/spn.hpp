#pragma once

#include "spn/codegen.hpp"
#include "spn/context.hpp"
#include "spn/csv.hpp"
#include "spn/data.hpp"
#include "spn/dot.hpp"
#include "spn/dsl.hpp"
#include "spn/error.hpp"
#include "spn/gradient.hpp"
#include "spn/inference.hpp"
#include "spn/json_io.hpp"
#include "spn/leaf_family.hpp"
#include "spn/learning.hpp"
#include "spn/network.hpp"
#include "spn/random.hpp"
#include "spn/random_structure.hpp"
#include "spn/sampling.hpp"
#include "spn/stats.hpp"
#include "spn/validate.hpp"

#pragma once

// Umbrella header: the whole model -> CNF -> OBDD -> circuit pipeline plus
// the exact score engines and dataset tooling.

#include "ddbc/bnn.hpp"
#include "ddbc/circuit.hpp"
#include "ddbc/cnf.hpp"
#include "ddbc/dataset.hpp"
#include "ddbc/encode.hpp"
#include "ddbc/nnf.hpp"
#include "ddbc/obdd.hpp"
#include "ddbc/pipeline.hpp"
#include "ddbc/shap.hpp"
#include "ddbc/util.hpp"

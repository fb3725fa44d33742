#pragma once

#include "common.hpp"
#include "core.hpp"
#include "expr.hpp"
#include "fixpoint.hpp"
#include "json_io.hpp"
#include "matrixaudit.hpp"
#include "scalarfn.hpp"
#include "sharp.hpp"
#include "topology.hpp"
#include "transforms.hpp"

#pragma once

#include "eqnn/activation.hpp"
#include "eqnn/error.hpp"
#include "eqnn/format.hpp"
#include "eqnn/group.hpp"
#include "eqnn/intertwiner.hpp"
#include "eqnn/io.hpp"
#include "eqnn/matrix.hpp"
#include "eqnn/network.hpp"
#include "eqnn/rep.hpp"
#include "eqnn/rng.hpp"
#include "eqnn/structured.hpp"
#include "eqnn/tasks.hpp"

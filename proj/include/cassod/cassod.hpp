#pragma once

#include "cassod/conv.hpp"
#include "cassod/error.hpp"
#include "cassod/hw_sim.hpp"
#include "cassod/module.hpp"
#include "cassod/netdesc.hpp"
#include "cassod/parallel.hpp"
#include "cassod/random.hpp"
#include "cassod/tensor.hpp"
#include "cassod/tensor_io.hpp"

#pragma once

#include "rvsm/csv.hpp"
#include "rvsm/curvegen/curvegen.hpp"
#include "rvsm/curvegen/dataset_io.hpp"
#include "rvsm/error.hpp"
#include "rvsm/metrics.hpp"
#include "rvsm/nn/checkpoint.hpp"
#include "rvsm/nn/layers.hpp"
#include "rvsm/nn/linear.hpp"
#include "rvsm/nn/network.hpp"
#include "rvsm/optimizer.hpp"
#include "rvsm/parameters.hpp"
#include "rvsm/prox.hpp"
#include "rvsm/random.hpp"
#include "rvsm/tensor.hpp"

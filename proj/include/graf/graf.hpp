#pragma once

#include "graf/adam.hpp"
#include "graf/attention.hpp"
#include "graf/dataset.hpp"
#include "graf/experiment.hpp"
#include "graf/fusion.hpp"
#include "graf/gcn.hpp"
#include "graf/graph.hpp"
#include "graf/metrics.hpp"
#include "graf/ops.hpp"
#include "graf/tensor.hpp"

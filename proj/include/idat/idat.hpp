#pragma once

#include "idat/adapt.hpp"
#include "idat/dataset.hpp"
#include "idat/experiment.hpp"
#include "idat/learn.hpp"
#include "idat/metrics.hpp"
#include "idat/model.hpp"
#include "idat/predict.hpp"
#include "idat/quantile.hpp"
#include "idat/report.hpp"
#include "idat/rng.hpp"

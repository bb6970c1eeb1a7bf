#pragma once

// Umbrella header for the orientbot library.

#include "orientbot/dataset.hpp"
#include "orientbot/errors.hpp"
#include "orientbot/eval.hpp"
#include "orientbot/grid.hpp"
#include "orientbot/image.hpp"
#include "orientbot/labels.hpp"
#include "orientbot/layers.hpp"
#include "orientbot/model.hpp"
#include "orientbot/model_io.hpp"
#include "orientbot/planner.hpp"
#include "orientbot/rng.hpp"
#include "orientbot/sim.hpp"
#include "orientbot/synthetic.hpp"
#include "orientbot/tensor.hpp"
#include "orientbot/train.hpp"

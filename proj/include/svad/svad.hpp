#pragma once

// Umbrella header for the whole toolkit.

#include "svad/checkpoint.hpp"
#include "svad/commands.hpp"
#include "svad/common.hpp"
#include "svad/config.hpp"
#include "svad/encoding.hpp"
#include "svad/energy.hpp"
#include "svad/features.hpp"
#include "svad/labels.hpp"
#include "svad/lottery.hpp"
#include "svad/matrix.hpp"
#include "svad/metrics.hpp"
#include "svad/pipeline.hpp"
#include "svad/pruning.hpp"
#include "svad/snn.hpp"
#include "svad/synth.hpp"
#include "svad/training.hpp"
#include "svad/wav.hpp"

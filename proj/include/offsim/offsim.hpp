#pragma once

// Umbrella header for the offsim library.

#include "offsim/common.hpp"
#include "offsim/box.hpp"
#include "offsim/eval.hpp"
#include "offsim/dataset.hpp"
#include "offsim/compression.hpp"
#include "offsim/network.hpp"
#include "offsim/pipeline.hpp"
#include "offsim/tradeoff.hpp"
#include "offsim/config.hpp"
#include "offsim/io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include "offsim/offsim.hpp"

#pragma once

#include "parallel.hpp"
#include "fft.hpp"
#include "signal.hpp"
#include "frequency.hpp"
#include "square_function.hpp"
#include "dyadic.hpp"
#include "tiles.hpp"
#include "time_frequency.hpp"
#include "weights.hpp"

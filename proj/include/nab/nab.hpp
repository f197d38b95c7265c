#pragma once

#include "nab/adam.hpp"
#include "nab/checkpoint.hpp"
#include "nab/common.hpp"
#include "nab/encoder.hpp"
#include "nab/fourier.hpp"
#include "nab/geometry.hpp"
#include "nab/metrics.hpp"
#include "nab/network.hpp"
#include "nab/parallel.hpp"
#include "nab/projector.hpp"
#include "nab/random.hpp"
#include "nab/raster_io.hpp"
#include "nab/sirt.hpp"
#include "nab/trainer.hpp"

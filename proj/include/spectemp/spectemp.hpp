#pragma once

#include "spectemp/classify.hpp"
#include "spectemp/core_signal.hpp"
#include "spectemp/descriptors.hpp"
#include "spectemp/emd.hpp"
#include "spectemp/error.hpp"
#include "spectemp/fft.hpp"
#include "spectemp/fusion.hpp"
#include "spectemp/io.hpp"
#include "spectemp/parallel.hpp"
#include "spectemp/pipeline.hpp"
#include "spectemp/rng.hpp"
#include "spectemp/spectral.hpp"
#include "spectemp/stats.hpp"
#include "spectemp/synthgen.hpp"
#include "spectemp/tau_select.hpp"

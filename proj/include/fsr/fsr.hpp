#pragma once

#include "core.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "basis.hpp"
#include "metrics.hpp"
#include "smooth.hpp"
#include "nelder_mead.hpp"
#include "fsim.hpp"
#include "penalty.hpp"
#include "plm.hpp"
#include "impact.hpp"
#include "predict.hpp"
#include "io.hpp"
#include "synth.hpp"

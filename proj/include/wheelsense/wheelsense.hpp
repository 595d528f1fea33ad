#pragma once

#include "common.hpp"
#include "dsp.hpp"
#include "evalkit.hpp"
#include "features.hpp"
#include "forest.hpp"
#include "fst_model.hpp"
#include "io_config.hpp"
#include "isolation.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "segmentation.hpp"
#include "synth.hpp"
#include "vsesm.hpp"

#pragma once

#include "seedforge/bilateral.hpp"
#include "seedforge/error.hpp"
#include "seedforge/eval.hpp"
#include "seedforge/gmm.hpp"
#include "seedforge/grid.hpp"
#include "seedforge/io.hpp"
#include "seedforge/otsu.hpp"
#include "seedforge/pipeline.hpp"
#include "seedforge/refine.hpp"
#include "seedforge/run.hpp"
#include "seedforge/saliency.hpp"
#include "seedforge/seeding.hpp"
#include "seedforge/segmenters.hpp"

#pragma once

#include "semrel/bundle_io.hpp"
#include "semrel/error.hpp"
#include "semrel/gam/bspline.hpp"
#include "semrel/gam/compare.hpp"
#include "semrel/gam/model.hpp"
#include "semrel/gam/penalized.hpp"
#include "semrel/gam/random.hpp"
#include "semrel/gam/simulate.hpp"
#include "semrel/geometry.hpp"
#include "semrel/lexicon.hpp"
#include "semrel/pnm.hpp"
#include "semrel/relevance.hpp"
#include "semrel/saliency.hpp"
#include "semrel/scene.hpp"
#include "semrel/vecmath.hpp"

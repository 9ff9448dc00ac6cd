#pragma once

#include "affvec/association.hpp"
#include "affvec/core.hpp"
#include "affvec/eval.hpp"
#include "affvec/inference.hpp"
#include "affvec/ingest.hpp"
#include "affvec/model_io.hpp"
#include "affvec/refine.hpp"
#include "affvec/weighting.hpp"

#pragma once

#include "category_rules.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "formality.hpp"
#include "learners.hpp"
#include "manifold.hpp"
#include "matrix.hpp"
#include "pipeline.hpp"
#include "plots.hpp"
#include "rng.hpp"
#include "textkit.hpp"

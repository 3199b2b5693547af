#pragma once

#include "exdyn/analysis.hpp"
#include "exdyn/categorization.hpp"
#include "exdyn/category_store.hpp"
#include "exdyn/convolution.hpp"
#include "exdyn/errors.hpp"
#include "exdyn/exemplar_engine.hpp"
#include "exdyn/field_engine.hpp"
#include "exdyn/grid.hpp"
#include "exdyn/io.hpp"
#include "exdyn/model.hpp"
#include "exdyn/rng.hpp"
#include "exdyn/run_config.hpp"
#include "exdyn/runner.hpp"
#include "exdyn/scenario.hpp"
#include "exdyn/trajectory.hpp"

#pragma once

#include "racig/assign.hpp"
#include "racig/attention.hpp"
#include "racig/control.hpp"
#include "racig/encoders.hpp"
#include "racig/errors.hpp"
#include "racig/fixtures.hpp"
#include "racig/index.hpp"
#include "racig/inject.hpp"
#include "racig/json_out.hpp"
#include "racig/msdb.hpp"
#include "racig/pipeline.hpp"
#include "racig/raster.hpp"
#include "racig/rng.hpp"
#include "racig/schedule.hpp"
#include "racig/tensor.hpp"

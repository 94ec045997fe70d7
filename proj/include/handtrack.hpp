#pragma once

#include "handtrack/error.hpp"
#include "handtrack/depth_io.hpp"
#include "handtrack/image_ops.hpp"
#include "handtrack/segmentation.hpp"
#include "handtrack/sampling.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/objective.hpp"
#include "handtrack/parallel.hpp"
#include "handtrack/pso.hpp"
#include "handtrack/reinit.hpp"
#include "handtrack/renderer.hpp"
#include "handtrack/pipeline.hpp"
#include "handtrack/config.hpp"

// Umbrella header for the huihen library.
#pragma once

#include "huihen/adam.hpp"
#include "huihen/checkpoint.hpp"
#include "huihen/common.hpp"
#include "huihen/config.hpp"
#include "huihen/dataset.hpp"
#include "huihen/embed_field.hpp"
#include "huihen/event_model.hpp"
#include "huihen/grad_check.hpp"
#include "huihen/gradient_suite.hpp"
#include "huihen/metrics.hpp"
#include "huihen/network.hpp"
#include "huihen/pipeline.hpp"
#include "huihen/recurrent_cells.hpp"
#include "huihen/rng.hpp"
#include "huihen/sessionizer.hpp"
#include "huihen/synthgen.hpp"
#include "huihen/tape.hpp"
#include "huihen/teacher.hpp"
#include "huihen/trainer.hpp"
#include "huihen/upi_head.hpp"

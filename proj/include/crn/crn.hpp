#pragma once

// Umbrella header: the whole library.

#include "crn/checkpoint.hpp"
#include "crn/cognition.hpp"
#include "crn/config.hpp"
#include "crn/corpus.hpp"
#include "crn/encoder.hpp"
#include "crn/errors.hpp"
#include "crn/evaluate.hpp"
#include "crn/experiments.hpp"
#include "crn/grad_check.hpp"
#include "crn/init.hpp"
#include "crn/lstm.hpp"
#include "crn/metrics.hpp"
#include "crn/model.hpp"
#include "crn/optim.hpp"
#include "crn/perception.hpp"
#include "crn/rng.hpp"
#include "crn/synth.hpp"
#include "crn/tensor.hpp"
#include "crn/tensor_io.hpp"
#include "crn/train.hpp"
#include "crn/version.hpp"

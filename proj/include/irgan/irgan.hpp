// Convenience umbrella: the whole library.
#pragma once

#include "irgan/config.hpp"
#include "irgan/core.hpp"
#include "irgan/dataset.hpp"
#include "irgan/evaluation.hpp"
#include "irgan/experiment.hpp"
#include "irgan/lab.hpp"
#include "irgan/objectives.hpp"
#include "irgan/sampling.hpp"
#include "irgan/scorers.hpp"
#include "irgan/trainer.hpp"

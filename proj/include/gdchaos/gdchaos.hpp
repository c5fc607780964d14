#pragma once

#include "gdchaos/chaos.hpp"
#include "gdchaos/config.hpp"
#include "gdchaos/dynamics.hpp"
#include "gdchaos/errors.hpp"
#include "gdchaos/experiments.hpp"
#include "gdchaos/io.hpp"
#include "gdchaos/linalg.hpp"
#include "gdchaos/objective.hpp"
#include "gdchaos/parallel.hpp"
#include "gdchaos/rng.hpp"
#include "gdchaos/stats.hpp"
#include "gdchaos/verdict.hpp"

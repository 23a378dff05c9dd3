#pragma once

#include "perfalign/contrastive.hpp"
#include "perfalign/core_alignment.hpp"
#include "perfalign/errors.hpp"
#include "perfalign/experiments.hpp"
#include "perfalign/matrix.hpp"
#include "perfalign/matrix_io.hpp"
#include "perfalign/metrics.hpp"
#include "perfalign/random.hpp"
#include "perfalign/separability.hpp"
#include "perfalign/synthetic.hpp"

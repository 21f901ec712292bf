#pragma once

// Umbrella header for the Lie algebra convolution library.

#include "laconv/autodiff.hpp"
#include "laconv/checkpoint.hpp"
#include "laconv/datasets.hpp"
#include "laconv/errors.hpp"
#include "laconv/gconv.hpp"
#include "laconv/image.hpp"
#include "laconv/io.hpp"
#include "laconv/lie.hpp"
#include "laconv/mat.hpp"
#include "laconv/metrics.hpp"
#include "laconv/optim.hpp"
#include "laconv/pendulum.hpp"
#include "laconv/rng.hpp"
#include "laconv/tensor.hpp"
#include "laconv/train.hpp"

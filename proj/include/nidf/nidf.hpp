#pragma once

#include "nidf/core/convolve.hpp"
#include "nidf/core/fft.hpp"
#include "nidf/core/gradient.hpp"
#include "nidf/core/image.hpp"
#include "nidf/core/io.hpp"
#include "nidf/core/metrics.hpp"
#include "nidf/core/parallel.hpp"
#include "nidf/core/rng.hpp"
#include "nidf/network/adam.hpp"
#include "nidf/network/checkpoint.hpp"
#include "nidf/network/layers.hpp"
#include "nidf/network/loss.hpp"
#include "nidf/network/trainer.hpp"
#include "nidf/network/unet.hpp"
#include "nidf/pipeline/cli.hpp"
#include "nidf/pipeline/config.hpp"
#include "nidf/pipeline/evaluate.hpp"
#include "nidf/psf/estimation.hpp"
#include "nidf/synthesis/dataset.hpp"
#include "nidf/synthesis/degrade.hpp"
#include "nidf/synthesis/random_walk.hpp"
#include "nidf/synthesis/scenes.hpp"

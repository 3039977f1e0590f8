#pragma once

// Umbrella header for the freepca library.

#include "freepca/analysis.hpp"
#include "freepca/decompose.hpp"
#include "freepca/errors.hpp"
#include "freepca/fusion.hpp"
#include "freepca/harness.hpp"
#include "freepca/noise.hpp"
#include "freepca/pca.hpp"
#include "freepca/rng.hpp"
#include "freepca/symmetric_eigen.hpp"
#include "freepca/tensor.hpp"
#include "freepca/tensor_io.hpp"

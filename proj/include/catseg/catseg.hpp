#pragma once

#include "catseg/calibration.hpp"
#include "catseg/domain.hpp"
#include "catseg/evaluation.hpp"
#include "catseg/haar.hpp"
#include "catseg/io.hpp"
#include "catseg/segmentation.hpp"
#include "catseg/selection.hpp"

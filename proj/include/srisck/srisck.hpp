#pragma once

#include "dictionary.hpp"
#include "detector.hpp"
#include "evaluation.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "keypoint_io.hpp"
#include "parallel.hpp"
#include "sparse_solver.hpp"

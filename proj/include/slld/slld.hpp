#pragma once

#include "slld/anchors.hpp"
#include "slld/coco_io.hpp"
#include "slld/dataset.hpp"
#include "slld/detection_ops.hpp"
#include "slld/errors.hpp"
#include "slld/evaluator.hpp"
#include "slld/geometry.hpp"
#include "slld/kmeans.hpp"
#include "slld/random.hpp"
#include "slld/reporting.hpp"

#pragma once

#include "ads3d/error.hpp"
#include "ads3d/parallel.hpp"
#include "ads3d/io/tensor.hpp"
#include "ads3d/io/image.hpp"
#include "ads3d/io/png.hpp"
#include "ads3d/io/dataset.hpp"
#include "ads3d/geometry/point_set.hpp"
#include "ads3d/geometry/kdtree.hpp"
#include "ads3d/geometry/normals.hpp"
#include "ads3d/geometry/ransac.hpp"
#include "ads3d/geometry/dbscan.hpp"
#include "ads3d/preprocess.hpp"
#include "ads3d/descriptors/grid.hpp"
#include "ads3d/descriptors/raw.hpp"
#include "ads3d/descriptors/hog.hpp"
#include "ads3d/descriptors/dsift.hpp"
#include "ads3d/descriptors/fpfh.hpp"
#include "ads3d/scoring/memory_bank.hpp"
#include "ads3d/scoring/coreset.hpp"
#include "ads3d/scoring/anomaly_map.hpp"
#include "ads3d/metrics/roc.hpp"
#include "ads3d/metrics/components.hpp"
#include "ads3d/metrics/pro.hpp"
#include "ads3d/metrics/report.hpp"
#include "ads3d/synth.hpp"
#include "ads3d/pipeline.hpp"

#pragma once

#include "roomlayout/camera.hpp"
#include "roomlayout/core_model.hpp"
#include "roomlayout/depth_fit.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/hypothesis.hpp"
#include "roomlayout/io.hpp"
#include "roomlayout/layout.hpp"
#include "roomlayout/metrics.hpp"
#include "roomlayout/synth.hpp"
#include "roomlayout/types.hpp"

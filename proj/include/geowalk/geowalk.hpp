#pragma once

#include "geowalk/annuli.hpp"
#include "geowalk/boxes.hpp"
#include "geowalk/config.hpp"
#include "geowalk/criteria.hpp"
#include "geowalk/delaunay.hpp"
#include "geowalk/error.hpp"
#include "geowalk/general_position.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/io.hpp"
#include "geowalk/network.hpp"
#include "geowalk/paths_chains.hpp"
#include "geowalk/point.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/predicates.hpp"
#include "geowalk/random.hpp"
#include "geowalk/spatial_grid.hpp"
#include "geowalk/stats.hpp"
#include "geowalk/version.hpp"
#include "geowalk/walk.hpp"

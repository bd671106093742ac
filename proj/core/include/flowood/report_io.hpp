#pragma once

#include <string>

#include "flowood/geometry.hpp"
#include "flowood/metrics.hpp"

namespace flowood {

std::string to_json(const EvalReport& report, int indent = 2);
std::string to_json(const GeometryReport& report, int indent = 2);

// Rows of edge_low,edge_high,count.
std::string histogram_csv(const Histogram& h);

}  // namespace flowood

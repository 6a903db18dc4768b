#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorfront/model.hpp"

namespace tumorfront {

struct Grid1D {
  std::vector<double> nodes;

  std::size_t n() const { return nodes.size(); }
  double xi_min() const { return nodes.front(); }
  double xi_max() const { return nodes.back(); }

  static Grid1D uniform(double xi_min, double xi_max, std::size_t n);
  // Uniform spacing hc on [-core, core], then spacing hc + growth * distance capped at hmax,
  // mirrored about 0 so that xi = 0 is a node.
  static Grid1D clustered(double half_length, double hc, double core, double growth, double hmax);

  // Throws ValidationError unless n >= 200 and the nodes strictly increase.
  void validate() const;
  // Index of the node closest to xi.
  std::size_t nearest(double xi) const;
};

// Slow decay length 1/(epsilon sqrt(delta3)) in the fast coordinate.
double slow_length(const ModelParams& p);

struct GridSpec {
  std::string kind = "clustered";  // or "uniform"
  double half_length = 20.0;       // in slow decay lengths
  double hc = 0.1;
  double core = 15.0;
  double growth = 0.05;
  double hmax = 0.0;  // 0 selects max(2, 0.02 slow lengths)
  std::size_t n = 2001;  // uniform grids only

  Grid1D build(const ModelParams& p) const;
};

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

}  // namespace tumorfront

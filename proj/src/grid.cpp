#include "tumorfront/grid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tumorfront/errors.hpp"
#include "tumorfront/io.hpp"

namespace tumorfront {

Grid1D Grid1D::uniform(double xi_min, double xi_max, std::size_t n) {
  if (n < 2 || !(xi_max > xi_min)) throw ValidationError("uniform grid needs n >= 2 and xi_max > xi_min");
  Grid1D g;
  g.nodes.resize(n);
  const double h = (xi_max - xi_min) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) g.nodes[i] = xi_min + h * double(i);
  g.nodes.back() = xi_max;
  return g;
}

Grid1D Grid1D::clustered(double half_length, double hc, double core, double growth, double hmax) {
  if (!(hc > 0.0 && hmax >= hc && half_length > core && growth >= 0.0))
    throw ValidationError("clustered grid needs hc > 0, hmax >= hc and half_length > core");
  auto spacing = [&](double x) { return std::min(hmax, hc + growth * std::max(0.0, std::abs(x) - core)); };
  std::vector<double> right{0.0};
  while (right.back() < half_length) {
    const double x = right.back();
    right.push_back(x + spacing(x + 0.5 * spacing(x)));
  }
  Grid1D g;
  g.nodes.reserve(2 * right.size() - 1);
  for (auto it = right.rbegin(); it != right.rend(); ++it) g.nodes.push_back(-*it);
  for (std::size_t i = 1; i < right.size(); ++i) g.nodes.push_back(right[i]);
  return g;
}

void Grid1D::validate() const {
  if (nodes.size() < 200) throw ValidationError(fmt::format("grid has {} nodes; at least 200 required", nodes.size()));
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw ValidationError(fmt::format("grid nodes not increasing at {}", i));
}

std::size_t Grid1D::nearest(double xi) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), xi);
  if (it == nodes.end()) return nodes.size() - 1;
  std::size_t i = std::size_t(it - nodes.begin());
  if (i > 0 && std::abs(nodes[i - 1] - xi) <= std::abs(nodes[i] - xi)) --i;
  return i;
}

double slow_length(const ModelParams& p) { return 1.0 / (p.epsilon * std::sqrt(p.delta3)); }

Grid1D GridSpec::build(const ModelParams& p) const {
  const double L = half_length * slow_length(p);
  if (kind == "uniform") return Grid1D::uniform(-L, L, n);
  if (kind != "clustered") throw ValidationError(fmt::format("unknown grid kind \"{}\"", kind));
  const double hm = hmax > 0.0 ? hmax : std::max(2.0, 0.02 * slow_length(p));
  return Grid1D::clustered(L, hc, core, growth, hm);
}

void to_json(nlohmann::json& j, const GridSpec& g) {
  j = {{"kind", g.kind}, {"half_length", g.half_length}, {"hc", g.hc}, {"core", g.core},
       {"growth", g.growth}, {"hmax", g.hmax}, {"n", g.n}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
  JsonReader r(j, "grid");
  r.get("kind", g.kind);
  r.get("half_length", g.half_length);
  r.get("hc", g.hc);
  r.get("core", g.core);
  r.get("growth", g.growth);
  r.get("hmax", g.hmax);
  r.get("n", g.n);
  r.finish();
}

}  // namespace tumorfront

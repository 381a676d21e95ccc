#include "forge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace forge {

RadialGrid::RadialGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 4) throw std::invalid_argument("RadialGrid: need >= 4 nodes");
  if (nodes_.front() != 0.0) throw std::invalid_argument("RadialGrid: r_0 must be 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1]))
      throw std::invalid_argument("RadialGrid: nodes not strictly increasing");
}

RadialGrid RadialGrid::graded(double r_max, std::size_t n) {
  // Equidistribute in log(1+r).
  std::vector<double> nodes(n);
  const double l_max = std::log1p(r_max);
  for (std::size_t i = 0; i < n; ++i)
    nodes[i] = std::expm1(l_max * static_cast<double>(i) /
                          static_cast<double>(n - 1));
  nodes[0] = 0.0;
  nodes[n - 1] = r_max;
  return RadialGrid(std::move(nodes));
}

RadialGrid RadialGrid::uniform(double r_max, std::size_t n) {
  std::vector<double> nodes(n);
  for (std::size_t i = 0; i < n; ++i)
    nodes[i] = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
  return RadialGrid(std::move(nodes));
}

std::size_t RadialGrid::locate(double r) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
  std::size_t i = (it == nodes_.begin()) ? 0 : static_cast<std::size_t>(it - nodes_.begin() - 1);
  return std::min(i, nodes_.size() - 2);
}

RadialProfile::RadialProfile(RadialGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() != values_.size())
    throw std::invalid_argument("RadialProfile: size mismatch");
  for (double v : values_)
    if (!std::isfinite(v))
      throw std::invalid_argument("RadialProfile: non-finite value");
}

RadialProfile RadialProfile::sample(const RadialGrid& grid,
                                    const std::function<double(double)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
  return RadialProfile(grid, std::move(v));
}

double RadialProfile::operator()(double r) const {
  const auto& x = grid_.nodes();
  if (r <= 0.0) return values_.front();
  if (r >= x.back()) return values_.back();
  std::size_t i = grid_.locate(r);
  // 4-point stencil centered on the bracketing interval.
  std::size_t s = (i == 0) ? 0 : i - 1;
  if (s + 3 >= x.size()) s = x.size() - 4;
  double result = 0.0;
  for (std::size_t j = s; j < s + 4; ++j) {
    double lj = 1.0;
    for (std::size_t k = s; k < s + 4; ++k)
      if (k != j) lj *= (r - x[k]) / (x[j] - x[k]);
    result += values_[j] * lj;
  }
  return result;
}

double RadialProfile::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

void RadialProfile::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "r,value\n";
  char buf[80];
  for (std::size_t i = 0; i < values_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid_[i], values_[i]);
    out << buf;
  }
}

RadialProfile RadialProfile::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> r, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    r.push_back(std::stod(a));
    v.push_back(std::stod(b));
  }
  return RadialProfile(RadialGrid(std::move(r)), std::move(v));
}

}  // namespace forge

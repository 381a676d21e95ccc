#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace forge {

// Strictly increasing radial nodes on [0, r_max].
class RadialGrid {
 public:
  RadialGrid() = default;
  explicit RadialGrid(std::vector<double> nodes);

  // Node density proportional to 1/(1+r): bubbles have algebraic tails, so
  // the grid spends its nodes where the profile still varies.
  static RadialGrid graded(double r_max, std::size_t n);
  static RadialGrid uniform(double r_max, std::size_t n);

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double r_max() const { return nodes_.back(); }
  double operator[](std::size_t i) const { return nodes_[i]; }

  // Index of the last node <= r (clamped to [0, size-2]).
  std::size_t locate(double r) const;

 private:
  std::vector<double> nodes_;
};

// Scalar function of radius sampled on a grid; cubic (4-point Lagrange)
// interpolation, O(h^4) on smooth data.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(RadialGrid grid, std::vector<double> values);
  static RadialProfile sample(const RadialGrid& grid,
                              const std::function<double(double)>& f);

  double operator()(double r) const;
  const RadialGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double max_abs() const;

  // CSV with columns r,value at 17 significant digits.
  void write_csv(const std::string& path) const;
  static RadialProfile read_csv(const std::string& path);

 private:
  RadialGrid grid_;
  std::vector<double> values_;
};

}  // namespace forge

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace limdp {

enum class MetricKind { Manhattan, Chebyshev, ShortestPath, Table };

const char* to_string(MetricKind kind);

/// Finite set of locations with a named distance function.
///
/// Grid spaces index cell (x, y) as y * width + x. Graph spaces use unweighted
/// shortest-path distance over undirected edges; table spaces carry an
/// explicit distance matrix. Distances between disconnected graph nodes are
/// +infinity.
class MetricSpace {
 public:
  MetricSpace() = default;

  static MetricSpace grid(int width, int height, MetricKind metric = MetricKind::Manhattan);
  static MetricSpace graph(std::vector<std::string> nodes, std::vector<std::pair<int, int>> edges);
  static MetricSpace table(std::vector<std::string> nodes, std::vector<std::vector<double>> distances);

  int size() const { return static_cast<int>(names_.size()); }
  bool contains(int location) const { return location >= 0 && location < size(); }
  double distance(int a, int b) const { return distances_[static_cast<std::size_t>(a) * names_.size() + b]; }

  MetricKind metric() const { return metric_; }
  bool is_grid() const { return metric_ == MetricKind::Manhattan || metric_ == MetricKind::Chebyshev; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  const std::string& name(int location) const { return names_.at(location); }
  std::optional<int> find(const std::string& name) const;
  std::optional<int> cell(int x, int y) const;

  /// Drawing position of a location. Grid cells use (x, y); graph and table
  /// nodes use explicit coordinates when set, otherwise (index, 0).
  std::pair<double, double> coords(int location) const;
  void set_coords(std::vector<std::pair<double, double>> coords);
  bool has_explicit_coords() const { return !coords_.empty(); }

  /// True when every finite distance is an integer.
  bool integer_valued() const;

  /// Exhaustive check of symmetry, identity, non-negativity and the triangle
  /// inequality. Grid and graph metrics satisfy these by construction.
  std::vector<std::string> axiom_violations() const;

  /// Largest finite pairwise distance.
  double diameter() const;

 private:
  MetricKind metric_ = MetricKind::Manhattan;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::string> names_;
  std::vector<double> distances_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::pair<double, double>> coords_;
};

}  // namespace limdp

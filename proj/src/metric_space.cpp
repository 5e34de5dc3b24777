#include "limdp/metric_space.hpp"

#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <sstream>

#include "limdp/error.hpp"

namespace limdp {

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Manhattan:
      return "manhattan";
    case MetricKind::Chebyshev:
      return "chebyshev";
    case MetricKind::ShortestPath:
      return "shortest_path";
    case MetricKind::Table:
      return "table";
  }
  return "unknown";
}

MetricSpace MetricSpace::grid(int width, int height, MetricKind metric) {
  if (width <= 0 || height <= 0) throw InvalidModelError("grid dimensions must be positive");
  if (metric != MetricKind::Manhattan && metric != MetricKind::Chebyshev)
    throw InvalidModelError("grid metric must be manhattan or chebyshev");
  MetricSpace space;
  space.metric_ = metric;
  space.width_ = width;
  space.height_ = height;
  const int n = width * height;
  space.names_.reserve(n);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) space.names_.push_back(std::to_string(x) + "," + std::to_string(y));
  space.distances_.resize(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int dx = std::abs(a % width - b % width);
      const int dy = std::abs(a / width - b / width);
      space.distances_[static_cast<std::size_t>(a) * n + b] =
          metric == MetricKind::Manhattan ? dx + dy : std::max(dx, dy);
    }
  }
  return space;
}

MetricSpace MetricSpace::graph(std::vector<std::string> nodes, std::vector<std::pair<int, int>> edges) {
  MetricSpace space;
  space.metric_ = MetricKind::ShortestPath;
  space.names_ = std::move(nodes);
  const int n = space.size();
  std::vector<std::vector<int>> adjacency(n);
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) throw InvalidModelError("graph edge references unknown node");
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
  space.edges_ = std::move(edges);
  space.distances_.assign(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::infinity());
  for (int source = 0; source < n; ++source) {
    std::deque<int> frontier{source};
    space.distances_[static_cast<std::size_t>(source) * n + source] = 0;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      const double du = space.distances_[static_cast<std::size_t>(source) * n + u];
      for (int v : adjacency[u]) {
        double& dv = space.distances_[static_cast<std::size_t>(source) * n + v];
        if (std::isinf(dv)) {
          dv = du + 1;
          frontier.push_back(v);
        }
      }
    }
  }
  return space;
}

MetricSpace MetricSpace::table(std::vector<std::string> nodes, std::vector<std::vector<double>> distances) {
  MetricSpace space;
  space.metric_ = MetricKind::Table;
  space.names_ = std::move(nodes);
  const auto n = space.names_.size();
  if (distances.size() != n) throw InvalidModelError("distance table must be square over the node list");
  space.distances_.reserve(n * n);
  for (const auto& row : distances) {
    if (row.size() != n) throw InvalidModelError("distance table must be square over the node list");
    space.distances_.insert(space.distances_.end(), row.begin(), row.end());
  }
  return space;
}

std::optional<int> MetricSpace::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::optional<int> MetricSpace::cell(int x, int y) const {
  if (!is_grid() || x < 0 || y < 0 || x >= width_ || y >= height_) return std::nullopt;
  return y * width_ + x;
}

std::pair<double, double> MetricSpace::coords(int location) const {
  if (is_grid()) return {location % width_, location / width_};
  if (!coords_.empty()) return coords_.at(location);
  return {static_cast<double>(location), 0.0};
}

void MetricSpace::set_coords(std::vector<std::pair<double, double>> coords) {
  if (!coords.empty() && static_cast<int>(coords.size()) != size())
    throw InvalidModelError("coordinate list must cover every node");
  coords_ = std::move(coords);
}

bool MetricSpace::integer_valued() const {
  for (double d : distances_)
    if (std::isfinite(d) && d != std::floor(d)) return false;
  return true;
}

std::vector<std::string> MetricSpace::axiom_violations() const {
  std::vector<std::string> out;
  const int n = size();
  auto describe = [&](const char* what, int a, int b) {
    std::ostringstream os;
    os << "metric axiom violated (" << what << ") at " << names_[a] << ", " << names_[b];
    out.push_back(os.str());
  };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double d = distance(a, b);
      if (d < 0 || std::isnan(d)) describe("non-negativity", a, b);
      if (d != distance(b, a)) describe("symmetry", a, b);
      if ((a == b) != (d == 0)) describe("zero iff identical", a, b);
    }
  }
  // One entry per violating pair.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m)
        if (distance(a, b) > distance(a, m) + distance(m, b)) {
          describe("triangle inequality", a, b);
          break;
        }
  return out;
}

double MetricSpace::diameter() const {
  double best = 0;
  for (double d : distances_)
    if (std::isfinite(d)) best = std::max(best, d);
  return best;
}

}  // namespace limdp

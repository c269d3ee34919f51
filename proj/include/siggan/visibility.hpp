#ifndef SIGGAN_VISIBILITY_HPP
#define SIGGAN_VISIBILITY_HPP

// Natural visibility graphs of a univariate window.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "siggan/error.hpp"

namespace siggan {

enum class GraphDirection { Undirected, LeftToRight };

class VisibilityGraph {
 public:
  VisibilityGraph() = default;
  VisibilityGraph(std::size_t n, bool directed) : n_(n), directed_(directed), adj_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool directed() const { return directed_; }

  bool operator()(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }

  // Adds i -> j, plus j -> i when undirected.
  void link(std::size_t i, std::size_t j) {
    adj_[i * n_ + j] = 1;
    if (!directed_) adj_[j * n_ + i] = 1;
  }

  std::size_t edge_count() const {
    const std::size_t ones = std::accumulate(adj_.begin(), adj_.end(), std::size_t{0});
    return directed_ ? ones : ones / 2;
  }

  std::span<const std::uint8_t> adjacency() const { return adj_; }

  friend bool operator==(const VisibilityGraph&, const VisibilityGraph&) = default;

 private:
  std::size_t n_ = 0;
  bool directed_ = false;
  std::vector<std::uint8_t> adj_;
};

namespace detail {

inline void check_visibility_input(std::span<const double> values,
                                   std::span<const double> timestamps) {
  if (values.size() != timestamps.size()) {
    throw ShapeError("visibility: " + std::to_string(values.size()) + " values but " +
                     std::to_string(timestamps.size()) + " timestamps");
  }
  if (values.size() < 2) throw SizeError("visibility graph needs at least 2 points");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw OrderingError("visibility: timestamp " + std::to_string(i) +
                          " is not after its predecessor");
    }
  }
}

// Height of the chord from (t_i, s_i) to (t_j, s_j) at t_k.
inline double chord_height(double si, double sj, double ti, double tj, double tk) {
  return si + (sj - si) * (tk - ti) / (tj - ti);
}

}  // namespace detail

inline std::vector<double> default_timestamps(std::size_t n) {
  std::vector<double> t(n);
  std::iota(t.begin(), t.end(), 0.0);
  return t;
}

/// Links i < j iff every k strictly between them lies strictly below the chord
/// joining (t_i, s_i) and (t_j, s_j). Collinear points block the view.
///
/// Scanning right from i, only the intermediate with the steepest slope from
/// i can block j, so it is enough to test the chord against that one point.
/// A visible j is itself the new steepest point. O(n^2).
inline VisibilityGraph natural_visibility(std::span<const double> values,
                                          std::span<const double> timestamps,
                                          GraphDirection direction) {
  detail::check_visibility_input(values, timestamps);
  const std::size_t n = values.size();
  VisibilityGraph g(n, direction == GraphDirection::LeftToRight);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g.link(i, i + 1);
    std::size_t blocker = i + 1;
    for (std::size_t j = i + 2; j < n; ++j) {
      const double h = detail::chord_height(values[i], values[j], timestamps[i], timestamps[j],
                                            timestamps[blocker]);
      if (values[blocker] < h) {
        g.link(i, j);
        blocker = j;
      }
    }
  }
  return g;
}

inline VisibilityGraph natural_visibility(std::span<const double> values,
                                          GraphDirection direction) {
  const auto t = default_timestamps(values.size());
  return natural_visibility(values, t, direction);
}

/// Naive triple loop over all pairs and intermediates; reference for tests.
inline VisibilityGraph brute_force_visibility(std::span<const double> values,
                                              std::span<const double> timestamps,
                                              GraphDirection direction) {
  detail::check_visibility_input(values, timestamps);
  const std::size_t n = values.size();
  if (n > 512) throw SizeError("brute_force_visibility is limited to 512 points");
  VisibilityGraph g(n, direction == GraphDirection::LeftToRight);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool visible = true;
      for (std::size_t k = i + 1; k < j; ++k) {
        const double h = detail::chord_height(values[i], values[j], timestamps[i], timestamps[j],
                                              timestamps[k]);
        if (!(values[k] < h)) visible = false;
      }
      if (visible) g.link(i, j);
    }
  }
  return g;
}

/// Per-node degree; out-degree for directed graphs.
inline std::vector<std::size_t> degree_sequence(const VisibilityGraph& g) {
  std::vector<std::size_t> deg(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) deg[i] += g(i, j) ? 1 : 0;
  }
  return deg;
}

/// Edge list, one `i j` pair per line, 0-indexed. Undirected edges are listed once with i < j.
inline void write_edge_list(std::ostream& os, const VisibilityGraph& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = g.directed() ? 0 : i + 1; j < g.size(); ++j) {
      if (g(i, j)) os << i << ' ' << j << '\n';
    }
  }
}

}  // namespace siggan

#endif  // SIGGAN_VISIBILITY_HPP

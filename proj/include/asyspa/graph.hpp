#pragma once

// Directed communication topologies and the asynchrony bookkeeping constants
// derived from timing bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"

namespace asyspa {

// Simple digraph over dense 0-based node ids.  Self-loops are implicit:
// every node always broadcasts to itself, so explicit edges are i -> j with
// i != j, and the broadcast fan-out is out_degree(i) + 1.
class Digraph {
 public:
  Digraph() = default;

  Digraph(int n, const std::vector<std::pair<int, int>>& edges) : out_(n), in_(n) {
    if (n <= 0) throw std::invalid_argument("Digraph: node count must be positive");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : edges) {
      if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::invalid_argument("Digraph: edge endpoint out of range");
      if (i == j) throw std::invalid_argument("Digraph: explicit self-loop not allowed");
      if (!seen.insert({i, j}).second) continue;  // ignore duplicates
      out_[i].push_back(j);
      in_[j].push_back(i);
    }
    for (auto& v : out_) std::sort(v.begin(), v.end());
    for (auto& v : in_) std::sort(v.begin(), v.end());
  }

  int size() const { return static_cast<int>(out_.size()); }
  const std::vector<int>& out(int i) const { return out_.at(i); }
  const std::vector<int>& in(int i) const { return in_.at(i); }

  // Broadcast fan-out: explicit out-neighbours plus the node itself.
  int fanout(int i) const { return static_cast<int>(out_.at(i).size()) + 1; }

  int edge_count() const {
    int m = 0;
    for (const auto& v : out_) m += static_cast<int>(v.size());
    return m;
  }

 private:
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

namespace detail {
inline std::vector<char> reachable(const Digraph& g, int start, bool reversed) {
  std::vector<char> seen(g.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : reversed ? g.in(u) : g.out(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}
}  // namespace detail

// True iff every node can reach every other along directed edges.  A single
// node with no edges counts as strongly connected (the degenerate
// centralized graph).
inline bool strongly_connected(const Digraph& g) {
  if (g.size() == 1) return true;
  auto fwd = detail::reachable(g, 0, false);
  auto bwd = detail::reachable(g, 0, true);
  for (int i = 0; i < g.size(); ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

// Degenerate single-node graph used by centralized-reduction tests.
inline Digraph make_single_node() { return Digraph(1, {}); }

// Directed ring: i -> i+1 (mod n).
inline Digraph make_ring(int n) {
  if (n < 2) throw std::invalid_argument("make_ring: need n >= 2");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return Digraph(n, e);
}

// Ring plus chords: i -> i+1, ..., i+k (mod n), 1 <= k <= n-1.
inline Digraph make_ring_plus_k(int n, int k) {
  if (n < 2) throw std::invalid_argument("make_ring_plus_k: need n >= 2");
  if (k < 1 || k > n - 1) throw std::invalid_argument("make_ring_plus_k: need 1 <= k <= n-1");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k; ++d) e.push_back({i, (i + d) % n});
  return Digraph(n, e);
}

// Exponential topology: i -> i + 2^j + 1 (mod n) for j = 0..floor(log2(n-1)).
// Offsets that reduce to 0 mod n are dropped; n = 2 leaves no valid edge, so
// n >= 3 is required.
inline Digraph make_exponential(int n) {
  if (n < 3) throw std::invalid_argument("make_exponential: need n >= 3");
  std::set<int> offsets;
  for (std::int64_t p = 1; p <= n - 1; p *= 2) {
    int off = static_cast<int>((p + 1) % n);
    if (off != 0) offsets.insert(off);
  }
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int off : offsets) e.push_back({i, (i + off) % n});
  return Digraph(n, e);
}

inline Digraph build_topology(const std::string& kind, int n, int k = 1) {
  if (kind == "single") {
    if (n != 1) throw std::invalid_argument("build_topology: kind 'single' needs n = 1");
    return make_single_node();
  }
  if (kind == "ring") return make_ring(n);
  if (kind == "ring_plus_k") return make_ring_plus_k(n, k);
  if (kind == "exponential") return make_exponential(n);
  throw std::invalid_argument("build_topology: unknown kind '" + kind + "'");
}

// --- Edge-list text format -------------------------------------------------
//
// Header line "n=<count>" followed by one "i j" pair per line.  Node ids in
// files are 1-based; internal ids are 0-based.

inline void write_edge_list(std::ostream& os, const Digraph& g) {
  os << "n=" << g.size() << "\n";
  for (int i = 0; i < g.size(); ++i)
    for (int j : g.out(i)) os << (i + 1) << " " << (j + 1) << "\n";
}

inline Digraph read_edge_list(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n=", 0) != 0)
    throw config_error("edge list: expected header line 'n=<count>'");
  int n = 0;
  try {
    n = std::stoi(line.substr(2));
  } catch (const std::exception&) {
    throw config_error("edge list: bad node count in header '" + line + "'");
  }
  if (n <= 0) throw config_error("edge list: node count must be positive");
  std::vector<std::pair<int, int>> edges;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    std::string extra;
    if (!(ls >> i >> j) || (ls >> extra))
      throw config_error("edge list: malformed line " + std::to_string(lineno) + ": '" + line + "'");
    if (i < 1 || i > n || j < 1 || j > n)
      throw config_error("edge list: node id out of range on line " + std::to_string(lineno));
    edges.push_back({i - 1, j - 1});
  }
  try {
    return Digraph(n, edges);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("edge list: ") + e.what());
  }
}

// --- Asynchrony bookkeeping -------------------------------------------------
//
// From timing bounds (activation gaps within [tau_min, tau_max], delivery
// delays within [0, tau_delay]) these event-count bounds follow:
//   b1: every node activates at least once within any window of b1
//       consecutive global events,
//   b2: every message is delivered within b2 events of its send,
//   b = b1 + b2: every message is consumed within b events of its send.

struct AsynchronyBounds {
  double tau_min = 0;
  double tau_max = 0;
  double tau_delay = 0;
  int b1 = 0;
  int b2 = 0;
  int b = 0;
};

inline AsynchronyBounds asynchrony_bounds(int n, double tau_min, double tau_max,
                                          double tau_delay) {
  if (n <= 0) throw std::invalid_argument("asynchrony_bounds: n must be positive");
  if (!(tau_min > 0)) throw std::invalid_argument("asynchrony_bounds: tau_min must be > 0");
  if (tau_max < tau_min)
    throw std::invalid_argument("asynchrony_bounds: tau_max must be >= tau_min");
  if (tau_delay < 0) throw std::invalid_argument("asynchrony_bounds: tau_delay must be >= 0");
  AsynchronyBounds ab;
  ab.tau_min = tau_min;
  ab.tau_max = tau_max;
  ab.tau_delay = tau_delay;
  ab.b1 = (n - 1) * static_cast<int>(std::floor(tau_max / tau_min)) + 1;
  ab.b2 = n * static_cast<int>(std::floor(tau_delay / tau_min));
  ab.b = ab.b1 + ab.b2;
  return ab;
}

}  // namespace asyspa

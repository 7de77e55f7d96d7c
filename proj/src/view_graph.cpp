#include "lma/view_graph.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "lma/errors.hpp"

namespace lma {
namespace {

constexpr double kLoadRotationTol = 1e-6;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path.string() + ": cannot open file", 0);
  }

  // Next non-blank line split into tokens; false at end of file.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, buf_)) {
      ++line_;
      tokens = split_ws(buf_);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_.string() + ":" + std::to_string(line_) + ": " + msg, line_);
  }

  double to_double(std::string_view tok) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
      fail("invalid number '" + std::string(tok) + "'");
    }
    return v;
  }

  std::size_t to_index(std::string_view tok) const {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail("invalid integer '" + std::string(tok) + "'");
    }
    return v;
  }

  Pose to_pose(std::span<const std::string_view> t) const {
    Pose m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.rotation(r, c) = to_double(t[3 * r + c]);
    for (int k = 0; k < 3; ++k) m.translation(k) = to_double(t[9 + k]);
    if (!is_rotation(m.rotation, kLoadRotationTol)) {
      throw ValidationError(path_.string() + ":" + std::to_string(line_) +
                            ": rotation is not a proper rotation");
    }
    return m;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string buf_;
  std::size_t line_ = 0;
};

void put(std::ostream& os, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  os.write(buf, p - buf);
}

void put_pose(std::ostream& os, const Pose& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      os << ' ';
      put(os, m.rotation(r, c));
    }
  for (int k = 0; k < 3; ++k) {
    os << ' ';
    put(os, m.translation(k));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace

ViewGraph::ViewGraph(std::size_t node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ == 0) throw ValidationError("view graph needs at least one node");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    const std::string where = "edge " + std::to_string(e) + " (" + std::to_string(ed.i) +
                              ", " + std::to_string(ed.j) + ")";
    if (ed.i >= node_count_ || ed.j >= node_count_) {
      throw ValidationError(where + ": node index out of range");
    }
    if (ed.i == ed.j) throw ValidationError(where + ": self-loop");
    if (!seen.emplace(ed.i, ed.j).second) throw ValidationError(where + ": duplicate edge");
  }
}

MotionSet gauge_normalize(const MotionSet& ms) {
  if (ms.size() == 0) return ms;
  const Pose anchor_inv = inverse(ms[0]);
  MotionSet out = ms;
  for (auto& p : out.poses) p = compose(p, anchor_inv);
  out[0] = Pose::identity();
  return out;
}

Twist residual_twist(const Pose& m_i, const Pose& m_ij, const Pose& m_j) {
  return log_se3(compose(compose(inverse(m_i), m_ij), m_j));
}

bool is_connected(const ViewGraph& g) {
  const std::size_t n = g.node_count();
  if (n <= 1) return true;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Edge& e : g.edges()) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t w : adj[u]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == n;
}

ViewGraph load_graph(const std::filesystem::path& path) {
  LineReader in(path);
  std::vector<std::string_view> tok;
  if (!in.next(tok)) in.fail("missing header 'n m'");
  if (tok.size() != 2) in.fail("header must be 'n m'");
  const std::size_t n = in.to_index(tok[0]);
  const std::size_t m = in.to_index(tok[1]);
  if (n == 0) in.fail("node count must be positive");

  std::vector<Edge> edges;
  edges.reserve(m);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < m; ++e) {
    if (!in.next(tok)) in.fail("expected " + std::to_string(m) + " edges, found " + std::to_string(e));
    if (tok.size() != 14) in.fail("edge line needs 14 fields, found " + std::to_string(tok.size()));
    Edge ed;
    ed.i = in.to_index(tok[0]);
    ed.j = in.to_index(tok[1]);
    const std::string where = path.string() + ":" + std::to_string(in.line()) + ": ";
    if (ed.i >= n || ed.j >= n) throw ValidationError(where + "node index out of range");
    if (ed.i == ed.j) throw ValidationError(where + "self-loop");
    if (!seen.emplace(ed.i, ed.j).second) throw ValidationError(where + "duplicate edge");
    ed.m_ij = in.to_pose(std::span(tok).subspan(2));
    edges.push_back(ed);
  }
  if (in.next(tok)) in.fail("unexpected trailing data");
  return ViewGraph(n, std::move(edges));
}

void save_graph(const ViewGraph& g, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (const Edge& e : g.edges()) {
    out << e.i << ' ' << e.j;
    put_pose(out, e.m_ij);
    out << '\n';
  }
  if (!out) throw Error(path.string() + ": write failed");
}

MotionSet load_motions(const std::filesystem::path& path) {
  LineReader in(path);
  std::vector<std::string_view> tok;
  if (!in.next(tok)) in.fail("missing header 'n'");
  if (tok.size() != 1) in.fail("header must be 'n'");
  const std::size_t n = in.to_index(tok[0]);
  MotionSet ms;
  ms.poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in.next(tok)) in.fail("expected " + std::to_string(n) + " poses, found " + std::to_string(i));
    if (tok.size() != 12) in.fail("pose line needs 12 fields, found " + std::to_string(tok.size()));
    ms.poses.push_back(in.to_pose(tok));
  }
  if (in.next(tok)) in.fail("unexpected trailing data");
  return ms;
}

void save_motions(const MotionSet& ms, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << ms.size() << '\n';
  for (const Pose& p : ms.poses) {
    std::ostringstream line;
    put_pose(line, p);
    out << line.str().substr(1) << '\n';
  }
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace lma

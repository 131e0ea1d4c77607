#include "airtnn/topology.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "airtnn/error.h"
#include "airtnn/text_io.h"

namespace airtnn {

int Graph::n_communities() const {
  if (community_of.empty()) return 0;
  return *std::max_element(community_of.begin(), community_of.end()) + 1;
}

std::vector<std::vector<int>> Graph::Neighbors() const {
  std::vector<std::vector<int>> nbrs(n_nodes);
  for (const auto& [u, v] : edges) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  for (auto& list : nbrs) std::sort(list.begin(), list.end());
  return nbrs;
}

void Graph::Validate() const {
  if (n_nodes < 0) throw PreconditionError("negative node count");
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_nodes || v >= n_nodes) {
      throw PreconditionError("edge endpoint out of range");
    }
    if (u == v) throw PreconditionError("self-loop on node " + std::to_string(u));
    if (u > v) throw PreconditionError("edge not oriented as u < v");
    if (!seen.emplace(u, v).second) {
      throw PreconditionError("duplicate edge (" + std::to_string(u) + ", " +
                              std::to_string(v) + ")");
    }
  }
  if (!community_of.empty()) {
    if (static_cast<int>(community_of.size()) != n_nodes) {
      throw PreconditionError("community labels do not cover every node");
    }
    for (int c : community_of) {
      if (c < 0) throw PreconditionError("negative community label");
    }
  }
}

bool IsConnected(const Graph& graph) {
  if (graph.n_nodes <= 1) return true;
  auto nbrs = graph.Neighbors();
  std::vector<char> seen(graph.n_nodes, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int z = stack.back();
    stack.pop_back();
    for (int w : nbrs[z]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == graph.n_nodes;
}

Graph SbmGenerate(int n_nodes, int n_communities, double p_intra,
                  double p_inter, Rng& rng, int max_attempts) {
  if (n_nodes <= 0 || n_communities <= 0 || n_nodes % n_communities != 0) {
    throw PreconditionError("n_nodes must be a positive multiple of n_communities");
  }
  if (!(0.0 <= p_inter && p_inter <= p_intra && p_intra <= 1.0)) {
    throw PreconditionError("need 0 <= p_inter <= p_intra <= 1");
  }
  const int block = n_nodes / n_communities;
  Graph g;
  g.n_nodes = n_nodes;
  g.community_of.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) g.community_of[i] = i / block;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    g.edges.clear();
    for (int u = 0; u < n_nodes; ++u) {
      for (int v = u + 1; v < n_nodes; ++v) {
        double p = g.community_of[u] == g.community_of[v] ? p_intra : p_inter;
        // Draw unconditionally so the stream layout does not depend on p.
        if (UniformOpen(rng) < p) g.edges.emplace_back(u, v);
      }
    }
    if (IsConnected(g)) return g;
  }
  throw GenerationError("SBM graph not connected after " +
                        std::to_string(max_attempts) + " attempts");
}

std::vector<std::vector<int>> CycleBasisPaton(const Graph& graph) {
  if (!IsConnected(graph)) {
    throw PreconditionError("cycle basis requires a connected graph");
  }
  std::vector<std::vector<int>> cycles;
  if (graph.n_nodes == 0) return cycles;
  auto nbrs = graph.Neighbors();

  // pred: spanning-tree parent. used[z]: nodes already linked to z by an
  // edge that has been accounted for (tree edge or closed cycle).
  std::vector<int> pred(graph.n_nodes, -1);
  std::vector<std::unordered_set<int>> used(graph.n_nodes);
  std::vector<char> visited(graph.n_nodes, 0);
  const int root = 0;
  pred[root] = root;
  visited[root] = 1;
  std::vector<int> stack = {root};
  while (!stack.empty()) {
    int z = stack.back();
    stack.pop_back();
    for (int nbr : nbrs[z]) {
      if (!visited[nbr]) {
        visited[nbr] = 1;
        pred[nbr] = z;
        used[nbr].insert(z);
        stack.push_back(nbr);
      } else if (!used[z].count(nbr)) {
        // Non-tree edge z-nbr closes a fundamental cycle through the tree.
        const auto& pn = used[nbr];
        std::vector<int> cycle = {nbr, z};
        int p = pred[z];
        while (!pn.count(p)) {
          cycle.push_back(p);
          p = pred[p];
        }
        cycle.push_back(p);
        cycles.push_back(std::move(cycle));
        used[nbr].insert(z);
      }
    }
  }
  return cycles;
}

namespace {

std::map<std::pair<int, int>, int> EdgeIndex(const Graph& g) {
  std::map<std::pair<int, int>, int> index;
  for (int e = 0; e < g.n_edges(); ++e) index[g.edges[e]] = e;
  return index;
}

}  // namespace

CellComplex2::CellComplex2(Graph graph, std::vector<Polygon> polygons)
    : graph_(std::move(graph)), polygons_(std::move(polygons)) {
  graph_.Validate();
  const int n0 = graph_.n_nodes;
  const int n1 = graph_.n_edges();
  const int n2 = static_cast<int>(polygons_.size());
  b1_ = Eigen::MatrixXi::Zero(n0, n1);
  for (int e = 0; e < n1; ++e) {
    b1_(graph_.edges[e].first, e) = -1;
    b1_(graph_.edges[e].second, e) = 1;
  }
  b2_ = Eigen::MatrixXi::Zero(n1, n2);
  for (int p = 0; p < n2; ++p) {
    const Polygon& poly = polygons_[p];
    if (poly.edges.size() != poly.signs.size() || poly.edges.size() < 3) {
      throw PreconditionError("polygon " + std::to_string(p) + " is malformed");
    }
    // Walk the boundary: each edge must start where the previous one ended.
    int start = -1;
    int at = -1;
    for (size_t k = 0; k < poly.edges.size(); ++k) {
      int e = poly.edges[k];
      int s = poly.signs[k];
      if (e < 0 || e >= n1 || (s != 1 && s != -1)) {
        throw PreconditionError("polygon " + std::to_string(p) +
                                " references an invalid edge or sign");
      }
      if (b2_(e, p) != 0) {
        throw PreconditionError("polygon " + std::to_string(p) +
                                " repeats an edge");
      }
      b2_(e, p) = s;
      auto [u, v] = graph_.edges[e];
      int from = s > 0 ? u : v;
      int to = s > 0 ? v : u;
      if (k == 0) {
        start = from;
      } else if (from != at) {
        throw PreconditionError("polygon " + std::to_string(p) +
                                " is not a closed walk");
      }
      at = to;
    }
    if (at != start) {
      throw PreconditionError("polygon " + std::to_string(p) + " is not closed");
    }
  }
  if (n2 > 0 && n0 > 0 && (b1_ * b2_).cwiseAbs().maxCoeff() != 0) {
    throw PreconditionError("B1 * B2 != 0");
  }
}

CellComplex2 CellComplex2::WithoutPolygons() const {
  return CellComplex2(graph_, {});
}

CellComplex2 LiftToComplex(Graph graph) {
  graph.Validate();
  auto cycles = CycleBasisPaton(graph);
  auto index = EdgeIndex(graph);
  std::vector<Polygon> polygons;
  polygons.reserve(cycles.size());
  for (const auto& cycle : cycles) {
    Polygon poly;
    for (size_t k = 0; k < cycle.size(); ++k) {
      int a = cycle[k];
      int b = cycle[(k + 1) % cycle.size()];
      poly.edges.push_back(index.at({std::min(a, b), std::max(a, b)}));
      poly.signs.push_back(a < b ? 1 : -1);
    }
    polygons.push_back(std::move(poly));
  }
  return CellComplex2(std::move(graph), std::move(polygons));
}

const char* ShiftKindName(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kLowerAdjacency: return "lower_adjacency";
    case ShiftKind::kUpperAdjacency: return "upper_adjacency";
    case ShiftKind::kLowerLaplacian: return "lower_laplacian";
    case ShiftKind::kUpperLaplacian: return "upper_laplacian";
  }
  return "?";
}

ShiftKind ParseShiftKind(const std::string& name) {
  for (ShiftKind k : {ShiftKind::kLowerAdjacency, ShiftKind::kUpperAdjacency,
                      ShiftKind::kLowerLaplacian, ShiftKind::kUpperLaplacian}) {
    if (name == ShiftKindName(k)) return k;
  }
  throw ConfigError("unknown shift operator kind '" + name + "'");
}

ShiftOperator MakeShiftOperator(const CellComplex2& complex, ShiftKind kind) {
  const int n1 = complex.n1();
  ShiftOperator op;
  op.kind = kind;
  switch (kind) {
    case ShiftKind::kLowerLaplacian:
      op.matrix = (complex.b1().transpose() * complex.b1()).cast<double>();
      break;
    case ShiftKind::kUpperLaplacian:
      op.matrix = (complex.b2() * complex.b2().transpose()).cast<double>();
      break;
    case ShiftKind::kLowerAdjacency: {
      op.matrix = Eigen::MatrixXd::Zero(n1, n1);
      std::vector<std::vector<int>> incident(complex.n0());
      for (int e = 0; e < n1; ++e) {
        incident[complex.graph().edges[e].first].push_back(e);
        incident[complex.graph().edges[e].second].push_back(e);
      }
      for (const auto& list : incident) {
        for (int a : list) {
          for (int b : list) {
            if (a != b) op.matrix(a, b) = 1.0;
          }
        }
      }
      break;
    }
    case ShiftKind::kUpperAdjacency:
      op.matrix = Eigen::MatrixXd::Zero(n1, n1);
      for (const Polygon& poly : complex.polygons()) {
        for (int a : poly.edges) {
          for (int b : poly.edges) {
            if (a != b) op.matrix(a, b) = 1.0;
          }
        }
      }
      break;
  }
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n1; ++j) {
      if (i != j && op.matrix(i, j) != 0.0) op.support.emplace_back(i, j);
    }
  }
  return op;
}

double SpectralNorm(const Eigen::MatrixXd& s, double tol, uint64_t seed,
                    int max_iter) {
  if (s.rows() != s.cols()) throw ContractError("spectral norm of non-square matrix");
  const Eigen::Index n = s.rows();
  if (n == 0) return 0.0;
  Rng rng = MakeRng(seed, {TagOf("spectral_norm")});
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 0.5 + UniformOpen(rng);
  v.normalize();
  // ||S v|| for unit v converges to max |lambda| even when -lambda_max is
  // also an eigenvalue (bipartite structure), unlike the Rayleigh quotient.
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = s * v;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    // Two-step ratio removes the oscillation between +/- lambda components.
    Eigen::VectorXd w2 = s * (w / norm);
    double norm2 = w2.norm();
    double next = std::sqrt(norm * norm2);
    if (it > 0 && std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
    v = w2 / norm2;
  }
  throw NumericError("power iteration did not converge");
}

std::vector<int> EdgePartition(const CellComplex2& complex) {
  const Graph& g = complex.graph();
  if (!g.has_communities()) {
    throw PreconditionError("edge partition needs community labels");
  }
  const int k = g.n_communities();
  std::vector<int> cls(g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) {
    int cu = g.community_of[g.edges[e].first];
    int cv = g.community_of[g.edges[e].second];
    cls[e] = cu == cv ? cu : k;
  }
  return cls;
}

void WriteComplex(std::ostream& out, const CellComplex2& complex) {
  const Graph& g = complex.graph();
  out << "airtnn-complex 1\n";
  out << "counts " << complex.n0() << ' ' << complex.n1() << ' '
      << complex.n2() << '\n';
  out << "communities " << (g.has_communities() ? 1 : 0);
  for (int c : g.community_of) out << ' ' << c;
  out << '\n';
  for (const auto& [u, v] : g.edges) out << "edge " << u << ' ' << v << '\n';
  for (const Polygon& poly : complex.polygons()) {
    out << "polygon " << poly.edges.size();
    for (size_t k = 0; k < poly.edges.size(); ++k) {
      out << ' ' << (poly.signs[k] > 0 ? '+' : '-') << poly.edges[k];
    }
    out << '\n';
  }
  out << "end-complex\n";
}

CellComplex2 ReadComplex(LineReader& reader) {
  auto header = reader.Expect("airtnn-complex");
  if (header.size() != 2) throw ParseError("bad complex header", reader.line());
  if (header[1] != "1") {
    throw UnsupportedVersionError(
        "unsupported complex format version " + std::string(header[1]),
        reader.line());
  }
  auto counts = reader.Expect("counts");
  if (counts.size() != 4) throw ParseError("counts needs 3 values", reader.line());
  const int64_t n0 = ParseInt(counts[1], reader.line());
  const int64_t n1 = ParseInt(counts[2], reader.line());
  const int64_t n2 = ParseInt(counts[3], reader.line());
  if (n0 < 0 || n1 < 0 || n2 < 0) throw ParseError("negative count", reader.line());

  Graph g;
  g.n_nodes = static_cast<int>(n0);
  auto comm = reader.Expect("communities");
  if (comm.size() < 2) throw ParseError("communities flag missing", reader.line());
  if (ParseInt(comm[1], reader.line()) != 0) {
    if (static_cast<int64_t>(comm.size()) != 2 + n0) {
      throw ParseError("expected one community label per node", reader.line());
    }
    for (int64_t i = 0; i < n0; ++i) {
      g.community_of.push_back(static_cast<int>(ParseInt(comm[2 + i], reader.line())));
    }
  }
  for (int64_t e = 0; e < n1; ++e) {
    auto t = reader.Expect("edge");
    if (t.size() != 3) throw ParseError("edge needs 2 endpoints", reader.line());
    g.edges.emplace_back(static_cast<int>(ParseInt(t[1], reader.line())),
                         static_cast<int>(ParseInt(t[2], reader.line())));
  }
  std::vector<Polygon> polygons;
  for (int64_t p = 0; p < n2; ++p) {
    auto t = reader.Expect("polygon");
    if (t.size() < 2) throw ParseError("polygon length missing", reader.line());
    int64_t len = ParseInt(t[1], reader.line());
    if (static_cast<int64_t>(t.size()) != 2 + len) {
      throw ParseError("polygon length does not match entries", reader.line());
    }
    Polygon poly;
    for (int64_t k = 0; k < len; ++k) {
      std::string_view tok = t[2 + k];
      if (tok.size() < 2 || (tok[0] != '+' && tok[0] != '-')) {
        throw ParseError("polygon entry must be +edge or -edge", reader.line());
      }
      poly.signs.push_back(tok[0] == '+' ? 1 : -1);
      poly.edges.push_back(static_cast<int>(ParseInt(tok.substr(1), reader.line())));
    }
    polygons.push_back(std::move(poly));
  }
  reader.Expect("end-complex");
  try {
    return CellComplex2(std::move(g), std::move(polygons));
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("invalid complex: ") + e.what(), reader.line());
  }
}

void SaveComplex(const std::string& path, const CellComplex2& complex) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteComplex(out, complex);
}

CellComplex2 LoadComplex(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  LineReader reader(in);
  return ReadComplex(reader);
}

}  // namespace airtnn

#ifndef AIRTNN_TOPOLOGY_H_
#define AIRTNN_TOPOLOGY_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "airtnn/rng.h"

namespace airtnn {

class LineReader;

// Undirected simple graph. Edges are stored oriented as (u, v) with u < v.
struct Graph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  // Community index per node; empty when the graph carries no labels.
  std::vector<int> community_of;

  int n_edges() const { return static_cast<int>(edges.size()); }
  bool has_communities() const { return !community_of.empty(); }
  int n_communities() const;

  // Sorted neighbor lists.
  std::vector<std::vector<int>> Neighbors() const;

  // Throws PreconditionError on self-loops, duplicates, bad orientation or
  // out-of-range node indices.
  void Validate() const;
};

bool IsConnected(const Graph& graph);

// Stochastic block model with equally sized communities. Node i belongs to
// community i / (n_nodes / n_communities). Draws are repeated until the
// graph is connected; GenerationError after `max_attempts` failures.
Graph SbmGenerate(int n_nodes, int n_communities, double p_intra,
                  double p_inter, Rng& rng, int max_attempts = 100);

// Fundamental cycle basis by Paton's spanning-tree method. Each cycle is a
// node sequence; consecutive nodes (and last -> first) are adjacent.
std::vector<std::vector<int>> CycleBasisPaton(const Graph& graph);

// A 2-cell: cyclically ordered edge indices, each with the sign (+1/-1) of
// traversing the edge along or against its u -> v orientation.
struct Polygon {
  std::vector<int> edges;
  std::vector<int> signs;
};

// Regular cell complex of order 2 built on a graph.
class CellComplex2 {
 public:
  CellComplex2() = default;
  // Checks every structural invariant, including B1 * B2 == 0.
  CellComplex2(Graph graph, std::vector<Polygon> polygons);

  const Graph& graph() const { return graph_; }
  const std::vector<Polygon>& polygons() const { return polygons_; }
  // Signed node-edge incidence, N0 x N1.
  const Eigen::MatrixXi& b1() const { return b1_; }
  // Signed edge-polygon incidence, N1 x N2.
  const Eigen::MatrixXi& b2() const { return b2_; }

  int n0() const { return graph_.n_nodes; }
  int n1() const { return graph_.n_edges(); }
  int n2() const { return static_cast<int>(polygons_.size()); }

  // Same complex with every polygon removed.
  CellComplex2 WithoutPolygons() const;

 private:
  Graph graph_;
  std::vector<Polygon> polygons_;
  Eigen::MatrixXi b1_;
  Eigen::MatrixXi b2_;
};

// Lifts a connected graph to a complex whose polygons are the fundamental
// cycles returned by CycleBasisPaton.
CellComplex2 LiftToComplex(Graph graph);

enum class ShiftKind { kLowerAdjacency, kUpperAdjacency, kLowerLaplacian,
                       kUpperLaplacian };

const char* ShiftKindName(ShiftKind kind);
ShiftKind ParseShiftKind(const std::string& name);

struct ShiftOperator {
  ShiftKind kind = ShiftKind::kLowerAdjacency;
  Eigen::MatrixXd matrix;
  // Off-diagonal nonzero positions (i, j), sorted row-major.
  std::vector<std::pair<int, int>> support;

  int size() const { return static_cast<int>(matrix.rows()); }
};

ShiftOperator MakeShiftOperator(const CellComplex2& complex, ShiftKind kind);

// Largest eigenvalue magnitude of a symmetric matrix by power iteration on a
// seeded start vector. Stops when successive estimates agree to relative
// tolerance `tol`; NumericError if `max_iter` is exhausted.
double SpectralNorm(const Eigen::MatrixXd& s, double tol = 1e-12,
                    uint64_t seed = 0, int max_iter = 200000);
inline double SpectralNorm(const ShiftOperator& s, double tol = 1e-12,
                           uint64_t seed = 0) {
  return SpectralNorm(s.matrix, tol, seed);
}

// Class index per edge: the shared community for intra-community edges,
// n_communities for every inter-community edge.
std::vector<int> EdgePartition(const CellComplex2& complex);

// Line-oriented text format, see README.
void WriteComplex(std::ostream& out, const CellComplex2& complex);
CellComplex2 ReadComplex(LineReader& reader);
void SaveComplex(const std::string& path, const CellComplex2& complex);
CellComplex2 LoadComplex(const std::string& path);

}  // namespace airtnn

#endif  // AIRTNN_TOPOLOGY_H_

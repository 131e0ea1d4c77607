#ifndef AIRTNN_TESTS_FIXTURES_H_
#define AIRTNN_TESTS_FIXTURES_H_

#include <utility>
#include <vector>

#include "airtnn/rng.h"
#include "airtnn/topology.h"

namespace airtnn::testing {

inline Graph MakeGraph(int n, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.n_nodes = n;
  g.edges = std::move(edges);
  return g;
}

// Single filled triangle 0-1-2.
inline CellComplex2 Triangle() {
  return LiftToComplex(MakeGraph(3, {{0, 1}, {0, 2}, {1, 2}}));
}

// Two triangles sharing edge (1, 2) plus a pendant edge: 5 edges, 2 polygons.
inline CellComplex2 Bowtie() {
  return LiftToComplex(MakeGraph(5, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {3, 4}}));
}

inline CellComplex2 K4() {
  return LiftToComplex(
      MakeGraph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
}

// Small SBM complex with a handful of edges and polygons.
inline CellComplex2 SmallSbm(uint64_t seed, int n = 12, int k = 2) {
  Rng rng = MakeRng(seed, {TagOf("fixture")});
  return LiftToComplex(SbmGenerate(n, k, 0.7, 0.15, rng));
}

}  // namespace airtnn::testing

#endif  // AIRTNN_TESTS_FIXTURES_H_

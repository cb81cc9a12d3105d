// Summary quality metric: semantic IOU similarity between shots, maximum
// weight bipartite matching, and precision/recall/F1 reports.
#pragma once

#include <vector>

#include "vsum/linalg.hpp"
#include "vsum/types.hpp"

namespace vsum {

// |a∩b| / |a∪b| over concept index sets. Both empty -> 0.
double iou(const SemanticVector& a, const SemanticVector& b);

// W(i,j) = iou(tags of rows[i], tags of cols[j]). Indices must be valid shots
// of v.
Matrix similarity_matrix(const Video& v, const std::vector<int>& rows,
                         const std::vector<int>& cols);

struct MatchedPair {
  int sys_shot = 0;
  int ref_shot = 0;
  double weight = 0.0;
};

struct MatchingResult {
  // (row, col) pairs with strictly positive weight, sorted by row.
  std::vector<std::pair<int, int>> pairs;
  double total_weight = 0.0;
};

// Maximum weight bipartite matching on a rectangular nonnegative matrix.
// Exact Hungarian assignment; zero-weight pairs are dropped from the result.
MatchingResult max_weight_matching(const Matrix& w);

enum class MatchMode { Count, Weight };

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<MatchedPair> matched_pairs;
  double matching_weight = 0.0;
  MatchMode mode = MatchMode::Count;
};

// Match sys shots against ref shots under IOU weights. Count mode scores the
// number of matched pairs; weight mode scores their total weight. Either side
// empty -> all-zero report. evaluate(a,b).f1 == evaluate(b,a).f1 exactly: the
// matching is computed in a canonical orientation shared by both calls.
EvalReport evaluate(const Video& v, const std::vector<int>& sys_shots,
                    const std::vector<int>& ref_shots, MatchMode mode = MatchMode::Count);

EvalReport evaluate(const Video& v, const Summary& sys, const Summary& ref,
                    MatchMode mode = MatchMode::Count);

// Mean of the per-reference reports. matched_pairs is left empty; refs must
// be nonempty.
EvalReport evaluate_multi(const Video& v, const std::vector<int>& sys_shots,
                          const std::vector<Summary>& refs, MatchMode mode = MatchMode::Count);

}  // namespace vsum

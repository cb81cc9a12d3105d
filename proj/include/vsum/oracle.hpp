// Greedy construction of a single target summary from several user
// summaries: start from the shots all users agree on, then add the shot with
// the largest total F1 gain until no shot helps.
#pragma once

#include <string>
#include <vector>

#include "vsum/metric.hpp"
#include "vsum/types.hpp"

namespace vsum {

enum class CandidatePool { UnionOfRefs, AllShots };

CandidatePool pool_from_name(const std::string& name);

// Sorted intersection of the reference summaries' shot sets.
std::vector<int> common_shots(const std::vector<Summary>& refs);

// Sum over references of F1(current ∪ {candidate}) − F1(current).
double marginal_gain(const Video& v, const std::vector<int>& current, int candidate,
                     const std::vector<Summary>& refs);

struct OracleStep {
  int shot = 0;
  double gain = 0.0;
  double avg_f1_after = 0.0;
};

struct OracleTrace {
  std::vector<int> start;
  std::vector<OracleStep> steps;
  std::vector<int> result;
};

// refs must be nonempty and refer to v. The returned summary carries
// user = "oracle" and the query id of q. Ties on gain pick the smallest shot
// index; the loop stops when the best gain is <= 0.
Summary build_oracle(const Video& v, const Query& q, const std::vector<Summary>& refs,
                     CandidatePool pool = CandidatePool::UnionOfRefs,
                     OracleTrace* trace = nullptr);

std::string trace_to_json(const OracleTrace& trace);

}  // namespace vsum

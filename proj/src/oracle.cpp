#include "vsum/oracle.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "vsum/error.hpp"

namespace vsum {

CandidatePool pool_from_name(const std::string& name) {
  if (name == "union") return CandidatePool::UnionOfRefs;
  if (name == "all") return CandidatePool::AllShots;
  fail("validation error: unknown candidate pool \"" + name + "\" (expected union or all)");
}

std::vector<int> common_shots(const std::vector<Summary>& refs) {
  if (refs.empty()) return {};
  std::vector<int> common = refs.front().shots;
  for (std::size_t u = 1; u < refs.size() && !common.empty(); ++u) {
    std::vector<int> next;
    std::set_intersection(common.begin(), common.end(), refs[u].shots.begin(),
                          refs[u].shots.end(), std::back_inserter(next));
    common = std::move(next);
  }
  return common;
}

namespace {

double total_f1(const Video& v, const std::vector<int>& shots,
                const std::vector<Summary>& refs) {
  double sum = 0.0;
  for (const Summary& ref : refs) sum += evaluate(v, shots, ref.shots).f1;
  return sum;
}

std::vector<int> with_shot(const std::vector<int>& shots, int candidate) {
  std::vector<int> out = shots;
  out.insert(std::upper_bound(out.begin(), out.end(), candidate), candidate);
  return out;
}

}  // namespace

double marginal_gain(const Video& v, const std::vector<int>& current, int candidate,
                     const std::vector<Summary>& refs) {
  if (std::binary_search(current.begin(), current.end(), candidate))
    fail("validation error: candidate shot " + std::to_string(candidate) +
         " is already selected");
  return total_f1(v, with_shot(current, candidate), refs) - total_f1(v, current, refs);
}

Summary build_oracle(const Video& v, const Query& q, const std::vector<Summary>& refs,
                     CandidatePool pool, OracleTrace* trace) {
  if (refs.empty()) fail("validation error: build_oracle requires at least one user summary");
  for (const Summary& ref : refs)
    if (ref.video_id != v.id)
      fail("validation error: user summary must refer to video \"" + v.id + "\"");

  std::set<int> candidates;
  if (pool == CandidatePool::AllShots) {
    for (const Shot& s : v.shots) candidates.insert(s.index);
  } else {
    for (const Summary& ref : refs) candidates.insert(ref.shots.begin(), ref.shots.end());
  }

  std::vector<int> selected = common_shots(refs);
  for (int s : selected) candidates.erase(s);
  if (trace) {
    trace->start = selected;
    trace->steps.clear();
  }

  double current_total = total_f1(v, selected, refs);
  while (!candidates.empty()) {
    int best_shot = -1;
    double best_total = current_total;
    for (int c : candidates) {
      const double t = total_f1(v, with_shot(selected, c), refs);
      // strict improvement required; ties keep the earlier (smaller) shot
      if (t > best_total) {
        best_total = t;
        best_shot = c;
      }
    }
    if (best_shot < 0) break;
    if (trace)
      trace->steps.push_back({best_shot, best_total - current_total,
                              best_total / static_cast<double>(refs.size())});
    selected = with_shot(selected, best_shot);
    candidates.erase(best_shot);
    current_total = best_total;
  }

  if (trace) trace->result = selected;

  Summary out;
  out.video_id = v.id;
  out.query_id = q.id;
  out.user = "oracle";
  out.shots = std::move(selected);
  return out;
}

std::string trace_to_json(const OracleTrace& trace) {
  nlohmann::ordered_json j;
  j["start"] = trace.start;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const OracleStep& s : trace.steps) {
    nlohmann::ordered_json js;
    js["shot"] = s.shot;
    js["gain"] = s.gain;
    js["avg_f1_after"] = s.avg_f1_after;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  j["result"] = trace.result;
  return j.dump(2) + "\n";
}

}  // namespace vsum

#include "vsum/metric.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>

#include "vsum/error.hpp"

namespace vsum {

double iou(const SemanticVector& a, const SemanticVector& b) {
  if (a.concepts.empty() && b.concepts.empty()) return 0.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.concepts.size() && j < b.concepts.size()) {
    if (a.concepts[i] == b.concepts[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a.concepts[i] < b.concepts[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.concepts.size() + b.concepts.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

Matrix similarity_matrix(const Video& v, const std::vector<int>& rows,
                         const std::vector<int>& cols) {
  const int n = static_cast<int>(v.shots.size());
  for (int s : rows)
    if (s < 0 || s >= n)
      fail("validation error: shot index " + std::to_string(s) + " out of range for video \"" +
           v.id + "\"");
  for (int s : cols)
    if (s < 0 || s >= n)
      fail("validation error: shot index " + std::to_string(s) + " out of range for video \"" +
           v.id + "\"");
  Matrix w(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      w(i, j) = iou(v.shots[rows[i]].tags, v.shots[cols[j]].tags);
  return w;
}

MatchingResult max_weight_matching(const Matrix& w) {
  MatchingResult result;
  const int n = w.rows();
  const int m = w.cols();
  if (n == 0 || m == 0) return result;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (w(i, j) < 0.0) fail("validation error: matching weights must be nonnegative");

  // Min-cost assignment on the negated matrix, zero-padded to square.
  const int size = std::max(n, m);
  const double inf = std::numeric_limits<double>::infinity();
  auto cost = [&](int i, int j) { return (i < n && j < m) ? -w(i, j) : 0.0; };

  std::vector<double> u(size + 1, 0.0), v(size + 1, 0.0);
  std::vector<int> p(size + 1, 0), way(size + 1, 0);
  for (int i = 1; i <= size; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(size + 1, inf);
    std::vector<char> used(size + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= size; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= size; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= size; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= n && j <= m && w(i - 1, j - 1) > 0.0) {
      result.pairs.emplace_back(i - 1, j - 1);
      result.total_weight += w(i - 1, j - 1);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  return result;
}

EvalReport evaluate(const Video& v, const std::vector<int>& sys_shots,
                    const std::vector<int>& ref_shots, MatchMode mode) {
  EvalReport report;
  report.mode = mode;
  if (sys_shots.empty() || ref_shots.empty()) return report;

  // Both argument orders must see the same matching, so orient by the
  // lexicographically smaller shot list.
  const bool flip = ref_shots < sys_shots;
  const std::vector<int>& rows = flip ? ref_shots : sys_shots;
  const std::vector<int>& cols = flip ? sys_shots : ref_shots;
  const Matrix w = similarity_matrix(v, rows, cols);
  const MatchingResult matching = max_weight_matching(w);

  for (const auto& [i, j] : matching.pairs) {
    MatchedPair pair;
    pair.sys_shot = flip ? cols[j] : rows[i];
    pair.ref_shot = flip ? rows[i] : cols[j];
    pair.weight = w(i, j);
    report.matched_pairs.push_back(pair);
  }
  std::sort(report.matched_pairs.begin(), report.matched_pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.sys_shot < b.sys_shot; });
  report.matching_weight = matching.total_weight;

  const double m = (mode == MatchMode::Count)
                       ? static_cast<double>(report.matched_pairs.size())
                       : matching.total_weight;
  report.precision = m / static_cast<double>(sys_shots.size());
  report.recall = m / static_cast<double>(ref_shots.size());
  if (report.precision + report.recall > 0.0)
    report.f1 =
        2.0 * report.precision * report.recall / (report.precision + report.recall);
  return report;
}

EvalReport evaluate(const Video& v, const Summary& sys, const Summary& ref, MatchMode mode) {
  if (sys.video_id != v.id || ref.video_id != v.id)
    fail("validation error: summaries must refer to video \"" + v.id + "\"");
  return evaluate(v, sys.shots, ref.shots, mode);
}

EvalReport evaluate_multi(const Video& v, const std::vector<int>& sys_shots,
                          const std::vector<Summary>& refs, MatchMode mode) {
  if (refs.empty()) fail("validation error: evaluate_multi requires at least one reference");
  EvalReport mean;
  mean.mode = mode;
  for (const Summary& ref : refs) {
    if (ref.video_id != v.id)
      fail("validation error: reference summary must refer to video \"" + v.id + "\"");
    const EvalReport r = evaluate(v, sys_shots, ref.shots, mode);
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
    mean.matching_weight += r.matching_weight;
  }
  const double k = static_cast<double>(refs.size());
  mean.precision /= k;
  mean.recall /= k;
  mean.f1 /= k;
  mean.matching_weight /= k;
  return mean;
}

}  // namespace vsum

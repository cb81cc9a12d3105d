// Concept-pair query construction from shot tag statistics. A concept counts
// as present in a video once it appears in at least t_presence shots; pairs
// fall into four scenarios by co-occurrence and presence, and queries are
// drawn from the scenario pools by weighted sampling without replacement.
#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "vsum/types.hpp"

namespace vsum {

struct ConceptStats {
  // freq[c] = number of shots whose tags contain c
  std::vector<int> freq;
  // cooc[c1*n+c2] = number of shots containing both, symmetric
  std::vector<int> cooc;
  int t_presence = 1;

  int dict_size() const { return static_cast<int>(freq.size()); }
  int cooc_at(int c1, int c2) const { return cooc[c1 * dict_size() + c2]; }
  bool present(int c) const { return freq[c] >= t_presence; }
  bool absent(int c) const { return freq[c] == 0; }
};

ConceptStats compute_stats(const Video& v, int dict_size, int t_presence);

// f1*f2/(f1+f2); rejects f1 = f2 = 0.
double harmonic_score(int f1, int f2);

struct WeightedPair {
  int c1 = 0;  // c1 < c2
  int c2 = 0;
  double weight = 0.0;
};

struct ScenarioPools {
  // i: both present, co-occurring; weight = co-occurrence count
  // ii: both present, never jointly; weight = harmonic frequency score
  // iii: present paired with absent; weight = present concept's frequency
  // iv: both absent; uniform weight 1
  std::vector<WeightedPair> i, ii, iii, iv;
};

// Pools i, ii, iii sorted by descending weight (ties by concept pair). The
// exclude set removes concepts from pool iii's present side; the caller
// passes the concepts its already-chosen queries consumed.
ScenarioPools scenario_pools(const ConceptStats& stats, const std::set<int>& exclude = {});

// counts are per scenario i..iv. Samples each pool without replacement with
// probability proportional to weight; pool iii is rebuilt after scenarios i
// and ii so their concepts are excluded. Query ids are
// "<video>.<scenario><ordinal>". Errors report the shortfall of every
// undersized pool at once.
std::vector<Query> build_queries(const Video& v, int dict_size,
                                 const std::array<int, 4>& counts, int t_presence,
                                 std::uint64_t seed);

// Pair classification: some shot holds both concepts -> i; otherwise by how
// many of the two are present: 2 -> ii, 1 -> iii, 0 -> iv. Exactly one label
// applies to every pair. Rejects |q| != 2.
Scenario classify_query(const Video& v, const Query& q, int t_presence);

}  // namespace vsum

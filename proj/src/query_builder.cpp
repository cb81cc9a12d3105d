#include "vsum/query_builder.hpp"

#include <algorithm>
#include <string>

#include "vsum/error.hpp"
#include "vsum/rng.hpp"

namespace vsum {

ConceptStats compute_stats(const Video& v, int dict_size, int t_presence) {
  if (dict_size < 1) fail("validation error: dictionary size must be >= 1");
  if (t_presence < 1) fail("validation error: t_presence must be >= 1");
  ConceptStats stats;
  stats.freq.assign(dict_size, 0);
  stats.cooc.assign(static_cast<std::size_t>(dict_size) * dict_size, 0);
  stats.t_presence = t_presence;
  for (const Shot& s : v.shots) {
    const auto& tags = s.tags.concepts;
    for (int c : tags) {
      if (c >= dict_size)
        fail("validation error: shot tag " + std::to_string(c) +
             " exceeds dictionary size " + std::to_string(dict_size));
      ++stats.freq[c];
    }
    for (std::size_t a = 0; a < tags.size(); ++a)
      for (std::size_t b = a + 1; b < tags.size(); ++b) {
        ++stats.cooc[tags[a] * dict_size + tags[b]];
        ++stats.cooc[tags[b] * dict_size + tags[a]];
      }
  }
  return stats;
}

double harmonic_score(int f1, int f2) {
  if (f1 < 0 || f2 < 0) fail("validation error: frequencies must be nonnegative");
  if (f1 == 0 && f2 == 0)
    fail("validation error: harmonic score undefined for two zero frequencies");
  return static_cast<double>(f1) * static_cast<double>(f2) /
         static_cast<double>(f1 + f2);
}

namespace {

void sort_by_weight_desc(std::vector<WeightedPair>& pool) {
  std::stable_sort(pool.begin(), pool.end(), [](const WeightedPair& a, const WeightedPair& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.c1 != b.c1) return a.c1 < b.c1;
    return a.c2 < b.c2;
  });
}

}  // namespace

ScenarioPools scenario_pools(const ConceptStats& stats, const std::set<int>& exclude) {
  ScenarioPools pools;
  const int n = stats.dict_size();
  for (int c1 = 0; c1 < n; ++c1) {
    for (int c2 = c1 + 1; c2 < n; ++c2) {
      if (stats.present(c1) && stats.present(c2)) {
        const int cooc = stats.cooc_at(c1, c2);
        if (cooc >= 1)
          pools.i.push_back({c1, c2, static_cast<double>(cooc)});
        else
          pools.ii.push_back({c1, c2, harmonic_score(stats.freq[c1], stats.freq[c2])});
      } else if (stats.absent(c1) && stats.absent(c2)) {
        pools.iv.push_back({c1, c2, 1.0});
      }
    }
  }
  // pool iii pairs an unused present concept with a fully absent one
  for (int p = 0; p < n; ++p) {
    if (!stats.present(p) || exclude.count(p)) continue;
    for (int a = 0; a < n; ++a) {
      if (!stats.absent(a)) continue;
      pools.iii.push_back({std::min(p, a), std::max(p, a), static_cast<double>(stats.freq[p])});
    }
  }
  sort_by_weight_desc(pools.i);
  sort_by_weight_desc(pools.ii);
  sort_by_weight_desc(pools.iii);
  return pools;
}

namespace {

// Weighted sampling without replacement: repeated renormalized draws.
std::vector<WeightedPair> sample_pool(std::vector<WeightedPair> pool, int count, Rng& rng) {
  std::vector<WeightedPair> chosen;
  for (int k = 0; k < count; ++k) {
    double total = 0.0;
    for (const WeightedPair& p : pool) total += p.weight;
    if (total <= 0.0) fail("validation error: query pool weights sum to zero");
    const double r = rng.uniform01() * total;
    double acc = 0.0;
    std::size_t pick = pool.size() - 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      acc += pool[i].weight;
      if (r < acc) {
        pick = i;
        break;
      }
    }
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + pick);
  }
  return chosen;
}

}  // namespace

std::vector<Query> build_queries(const Video& v, int dict_size,
                                 const std::array<int, 4>& counts, int t_presence,
                                 std::uint64_t seed) {
  for (int c : counts)
    if (c < 0) fail("validation error: query counts must be nonnegative");
  const ConceptStats stats = compute_stats(v, dict_size, t_presence);
  const ScenarioPools pools = scenario_pools(stats);

  Rng rng(derive_seed(seed, "queries"));
  std::string shortfall;
  auto note_shortfall = [&](Scenario s, int have, int want) {
    if (!shortfall.empty()) shortfall += "; ";
    shortfall += "scenario " + std::string(scenario_name(s)) + " has " + std::to_string(have) +
                 " candidates, " + std::to_string(want) + " requested";
  };

  std::vector<WeightedPair> chosen_i, chosen_ii, chosen_iii, chosen_iv;
  if (static_cast<int>(pools.i.size()) < counts[0])
    note_shortfall(Scenario::I, static_cast<int>(pools.i.size()), counts[0]);
  else
    chosen_i = sample_pool(pools.i, counts[0], rng);
  if (static_cast<int>(pools.ii.size()) < counts[1])
    note_shortfall(Scenario::II, static_cast<int>(pools.ii.size()), counts[1]);
  else
    chosen_ii = sample_pool(pools.ii, counts[1], rng);

  std::set<int> used;
  for (const WeightedPair& p : chosen_i) {
    used.insert(p.c1);
    used.insert(p.c2);
  }
  for (const WeightedPair& p : chosen_ii) {
    used.insert(p.c1);
    used.insert(p.c2);
  }
  const ScenarioPools later = scenario_pools(stats, used);
  if (static_cast<int>(later.iii.size()) < counts[2])
    note_shortfall(Scenario::III, static_cast<int>(later.iii.size()), counts[2]);
  else
    chosen_iii = sample_pool(later.iii, counts[2], rng);
  if (static_cast<int>(later.iv.size()) < counts[3])
    note_shortfall(Scenario::IV, static_cast<int>(later.iv.size()), counts[3]);
  else
    chosen_iv = sample_pool(later.iv, counts[3], rng);

  if (!shortfall.empty())
    fail("validation error: insufficient query pool for video \"" + v.id + "\": " + shortfall);

  std::vector<Query> out;
  auto emit = [&](const std::vector<WeightedPair>& chosen, Scenario s) {
    int ordinal = 0;
    for (const WeightedPair& p : chosen) {
      Query q;
      q.id = v.id + "." + scenario_name(s) + std::to_string(++ordinal);
      q.video_id = v.id;
      q.concepts = {p.c1, p.c2};
      q.scenario = s;
      out.push_back(std::move(q));
    }
  };
  emit(chosen_i, Scenario::I);
  emit(chosen_ii, Scenario::II);
  emit(chosen_iii, Scenario::III);
  emit(chosen_iv, Scenario::IV);
  return out;
}

Scenario classify_query(const Video& v, const Query& q, int t_presence) {
  if (q.concepts.size() != 2)
    fail("validation error: classification is defined for concept pairs, query \"" + q.id +
         "\" has " + std::to_string(q.concepts.size()) + " concepts");
  const int c1 = q.concepts[0];
  const int c2 = q.concepts[1];
  int f1 = 0, f2 = 0, joint = 0;
  for (const Shot& s : v.shots) {
    const bool has1 = s.tags.contains(c1);
    const bool has2 = s.tags.contains(c2);
    f1 += has1;
    f2 += has2;
    joint += has1 && has2;
  }
  if (joint >= 1) return Scenario::I;
  const int present = (f1 >= t_presence) + (f2 >= t_presence);
  if (present == 2) return Scenario::II;
  if (present == 1) return Scenario::III;
  return Scenario::IV;
}

}  // namespace vsum

#include "vsum/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vsum/dataset_io.hpp"
#include "vsum/error.hpp"
#include "vsum/metric.hpp"
#include "vsum/query_builder.hpp"
#include "vsum/rng.hpp"

namespace vsum {

namespace {

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(std::string("validation error: ") + name + " must be in [0, 1]");
}

void check_config(const SynthConfig& cfg) {
  if (cfg.dict_size < 2) fail("validation error: dict_size must be >= 2");
  if (cfg.videos < 1) fail("validation error: videos must be >= 1");
  if (cfg.segments_per_video < 1) fail("validation error: segments_per_video must be >= 1");
  if (cfg.shots_per_segment < 1) fail("validation error: shots_per_segment must be >= 1");
  if (cfg.frames_per_shot < 1) fail("validation error: frames_per_shot must be >= 1");
  if (cfg.noise_dims < 0) fail("validation error: noise_dims must be >= 0");
  if (!(cfg.active_fraction > 0.0 && cfg.active_fraction <= 1.0))
    fail("validation error: active_fraction must be in (0, 1]");
  if (cfg.tag_groups < 1) fail("validation error: tag_groups must be >= 1");
  if (cfg.tags_min < 1 || cfg.tags_max < cfg.tags_min)
    fail("validation error: tags range must satisfy 1 <= tags_min <= tags_max");
  if (cfg.users < 1) fail("validation error: users must be >= 1");
  if (cfg.noise_sigma < 0.0) fail("validation error: noise_sigma must be >= 0");
  if (cfg.t_presence < 1) fail("validation error: t_presence must be >= 1");
  for (int c : cfg.query_counts)
    if (c < 0) fail("validation error: query counts must be nonnegative");
  check_prob(cfg.tag_persistence, "tag_persistence");
  check_prob(cfg.salient_prob, "salient_prob");
  check_prob(cfg.visibility, "visibility");
  check_prob(cfg.p_rel, "p_rel");
  check_prob(cfg.p_ctx, "p_ctx");
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: generator config: ") + e.what());
  }
  static const std::set<std::string> known = {
      "dict_size",    "videos",        "segments_per_video", "shots_per_segment",
      "frames_per_shot", "noise_dims", "active_fraction",    "tag_groups",
      "tag_persistence", "tags_min",   "tags_max",           "salient_prob",
      "visibility",   "noise_sigma",   "users",              "p_rel",
      "p_ctx",        "query_counts",  "t_presence",         "seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      fail("parse error: generator config: unknown key \"" + key + "\"");

  SynthConfig cfg;
  try {
    cfg.dict_size = j.value("dict_size", cfg.dict_size);
    cfg.videos = j.value("videos", cfg.videos);
    cfg.segments_per_video = j.value("segments_per_video", cfg.segments_per_video);
    cfg.shots_per_segment = j.value("shots_per_segment", cfg.shots_per_segment);
    cfg.frames_per_shot = j.value("frames_per_shot", cfg.frames_per_shot);
    cfg.noise_dims = j.value("noise_dims", cfg.noise_dims);
    cfg.active_fraction = j.value("active_fraction", cfg.active_fraction);
    cfg.tag_groups = j.value("tag_groups", cfg.tag_groups);
    cfg.tag_persistence = j.value("tag_persistence", cfg.tag_persistence);
    cfg.tags_min = j.value("tags_min", cfg.tags_min);
    cfg.tags_max = j.value("tags_max", cfg.tags_max);
    cfg.salient_prob = j.value("salient_prob", cfg.salient_prob);
    cfg.visibility = j.value("visibility", cfg.visibility);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.users = j.value("users", cfg.users);
    cfg.p_rel = j.value("p_rel", cfg.p_rel);
    cfg.p_ctx = j.value("p_ctx", cfg.p_ctx);
    if (j.contains("query_counts")) {
      const auto counts = j["query_counts"].get<std::vector<int>>();
      if (counts.size() != 4)
        fail("parse error: generator config: query_counts needs 4 entries");
      std::copy(counts.begin(), counts.end(), cfg.query_counts.begin());
    }
    cfg.t_presence = j.value("t_presence", cfg.t_presence);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: generator config: ") + e.what());
  }
  check_config(cfg);
  return cfg;
}

SynthConfig load_synth_config(const std::string& path) {
  return synth_config_from_json(read_text_file(path));
}

namespace {

std::string concept_name(int c) {
  std::ostringstream s;
  s << "concept_" << std::setw(2) << std::setfill('0') << c;
  return s.str();
}

struct VideoPlan {
  Video video;
  int salient = 0;
};

VideoPlan plan_video(const SynthConfig& cfg, int index) {
  Rng rng(derive_seed(derive_seed(cfg.seed, "video"), static_cast<std::uint64_t>(index)));
  VideoPlan plan;
  plan.video.id = "v" + std::to_string(index);
  plan.video.segment_size = cfg.shots_per_segment;

  const int active_count = std::max(
      cfg.tag_groups, static_cast<int>(std::round(cfg.active_fraction * cfg.dict_size)));
  std::vector<int> active = rng.sample_indices(cfg.dict_size, active_count);
  std::sort(active.begin(), active.end());

  // contiguous chunks of the active list, sizes differing by at most one
  std::vector<std::vector<int>> groups(cfg.tag_groups);
  for (int i = 0; i < active_count; ++i)
    groups[i * cfg.tag_groups / active_count].push_back(active[i]);

  plan.salient = active[rng.uniform_int(active_count)];

  const int n_shots = cfg.segments_per_video * cfg.shots_per_segment;
  const int d_f = cfg.dict_size + cfg.noise_dims;
  int group = rng.uniform_int(cfg.tag_groups);
  for (int s = 0; s < n_shots; ++s) {
    if (s > 0 && !rng.bernoulli(cfg.tag_persistence)) group = rng.uniform_int(cfg.tag_groups);
    const std::vector<int>& pool = groups[group];

    Shot shot;
    shot.index = s;
    const int span = cfg.tags_max - cfg.tags_min + 1;
    int count = cfg.tags_min + rng.uniform_int(span);
    count = std::min(count, static_cast<int>(pool.size()));
    std::vector<int> tags;
    for (int pick : rng.sample_indices(static_cast<int>(pool.size()), count))
      tags.push_back(pool[pick]);
    if (rng.bernoulli(cfg.salient_prob)) tags.push_back(plan.salient);
    shot.tags = SemanticVector::of(std::move(tags));

    // Each frame focuses on one of the shot's tags and fires only that
    // concept's detector. Frames of a shot thereby show different aspects
    // of it, so query-keyed attention has something real to select;
    // uniform pooling dilutes a tag's signal by the tag count.
    const std::vector<int>& tag_list = shot.tags.concepts;
    for (int k = 0; k < cfg.frames_per_shot; ++k) {
      Vec f(d_f, 0.0);
      if (!tag_list.empty()) {
        const int focus = tag_list[rng.uniform_int(static_cast<int>(tag_list.size()))];
        if (rng.bernoulli(cfg.visibility)) f[focus] = 1.0;
      }
      if (cfg.noise_sigma > 0.0)
        for (double& x : f) x += rng.normal(0.0, cfg.noise_sigma);
      shot.frames.push_back(std::move(f));
    }
    plan.video.shots.push_back(std::move(shot));
  }
  return plan;
}

}  // namespace

Dataset generate(const SynthConfig& cfg) {
  check_config(cfg);
  Dataset d;
  for (int c = 0; c < cfg.dict_size; ++c) d.dictionary.names.push_back(concept_name(c));

  std::vector<int> salient(cfg.videos, 0);
  for (int i = 0; i < cfg.videos; ++i) {
    VideoPlan plan = plan_video(cfg, i);
    salient[i] = plan.salient;
    d.videos.push_back(std::move(plan.video));
  }

  for (int i = 0; i < cfg.videos; ++i) {
    const Video& v = d.videos[i];
    const std::uint64_t qseed =
        derive_seed(derive_seed(cfg.seed, "queries"), static_cast<std::uint64_t>(i));
    std::vector<Query> queries =
        build_queries(v, cfg.dict_size, cfg.query_counts, cfg.t_presence, qseed);

    Rng urng(derive_seed(derive_seed(cfg.seed, "users"), static_cast<std::uint64_t>(i)));
    for (const Query& q : queries) {
      for (int u = 0; u < cfg.users; ++u) {
        Summary s;
        s.video_id = v.id;
        s.query_id = q.id;
        s.user = "u" + std::to_string(u + 1);
        for (const Shot& shot : v.shots) {
          // both coins are always drawn so the stream does not depend on tags
          const bool rel_coin = urng.bernoulli(cfg.p_rel);
          const bool ctx_coin = urng.bernoulli(cfg.p_ctx);
          bool relevant = false;
          for (int c : q.concepts) relevant = relevant || shot.tags.contains(c);
          const bool context = shot.tags.contains(salient[i]);
          if ((relevant && rel_coin) || (context && ctx_coin)) s.shots.push_back(shot.index);
        }
        d.user_summaries.push_back(std::move(s));
      }
      d.queries.push_back(q);
    }
  }

  validate(d);
  return d;
}

namespace {

int perturb_count(double fraction, int n) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    fail("validation error: fraction must be in [0, 1]");
  // half rounds away from zero; the deletion linearity contract depends on it
  return static_cast<int>(std::round(fraction * static_cast<double>(n)));
}

}  // namespace

Summary perturb_delete(const Summary& s, double fraction, std::uint64_t seed) {
  const int n = s.size();
  const int k = perturb_count(fraction, n);
  Rng rng(derive_seed(seed, "delete"));
  std::vector<int> victims = rng.sample_indices(n, k);
  std::sort(victims.begin(), victims.end());
  Summary out = s;
  out.shots.clear();
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(victims.begin(), victims.end(), i)) out.shots.push_back(s.shots[i]);
  return out;
}

Summary perturb_replace(const Summary& s, double fraction, const std::vector<int>& pool,
                        std::uint64_t seed) {
  const int n = s.size();
  const int k = perturb_count(fraction, n);
  std::vector<int> avail;
  for (int shot : sorted_unique(pool))
    if (!s.contains(shot)) avail.push_back(shot);
  if (static_cast<int>(avail.size()) < k)
    fail("validation error: replacement pool has " + std::to_string(avail.size()) +
         " shots outside the summary, need " + std::to_string(k));

  Rng rng(derive_seed(seed, "replace"));
  std::vector<int> victims = rng.sample_indices(n, k);
  std::sort(victims.begin(), victims.end());
  Summary out = s;
  out.shots.clear();
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(victims.begin(), victims.end(), i)) out.shots.push_back(s.shots[i]);
  for (int pick : rng.sample_indices(static_cast<int>(avail.size()), k))
    out.shots.push_back(avail[pick]);
  out.shots = sorted_unique(out.shots);
  return out;
}

PerturbMode perturb_mode_from_name(const std::string& name) {
  if (name == "delete") return PerturbMode::Delete;
  if (name == "replace") return PerturbMode::Replace;
  fail("validation error: unknown perturbation mode \"" + name +
       "\" (expected delete or replace)");
}

std::vector<CurveRow> curve_experiment(const Dataset& d, const std::vector<Summary>& refs,
                                       const std::vector<double>& fractions, int trials,
                                       PerturbMode mode, std::uint64_t seed) {
  if (trials < 1) fail("validation error: trials must be >= 1");
  if (refs.empty()) fail("validation error: curve_experiment requires summaries");
  if (fractions.empty()) fail("validation error: curve_experiment requires fractions");

  std::vector<CurveRow> rows;
  const std::uint64_t base = derive_seed(seed, "curve");
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    CurveRow row;
    row.fraction = fractions[fi];
    row.trials = trials;
    for (int trial = 0; trial < trials; ++trial) {
      for (std::size_t ri = 0; ri < refs.size(); ++ri) {
        const Summary& ref = refs[ri];
        const Video* v = d.find_video(ref.video_id);
        if (!v)
          fail("validation error: summary names unknown video \"" + ref.video_id + "\"");
        const std::uint64_t trial_seed = derive_seed(
            derive_seed(derive_seed(base, fi), static_cast<std::uint64_t>(trial)), ri);
        Summary pert;
        if (mode == PerturbMode::Delete) {
          pert = perturb_delete(ref, fractions[fi], trial_seed);
        } else {
          std::vector<int> pool;
          for (const Shot& shot : v->shots)
            if (!ref.contains(shot.index)) pool.push_back(shot.index);
          pert = perturb_replace(ref, fractions[fi], pool, trial_seed);
        }
        const EvalReport r = evaluate(*v, pert.shots, ref.shots, MatchMode::Count);
        row.mean_precision += r.precision;
        row.mean_recall += r.recall;
        row.mean_f1 += r.f1;
      }
    }
    const double denom = static_cast<double>(trials) * static_cast<double>(refs.size());
    row.mean_precision /= denom;
    row.mean_recall /= denom;
    row.mean_f1 /= denom;
    rows.push_back(row);
  }
  return rows;
}

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "fraction,mean_precision,mean_recall,mean_f1,trials\n";
  for (const CurveRow& r : rows)
    out << r.fraction << ',' << r.mean_precision << ',' << r.mean_recall << ','
        << r.mean_f1 << ',' << r.trials << '\n';
  return out.str();
}

}  // namespace vsum

// Synthetic dataset generation with planted structure: concept communities
// give the scenario pools their shape, a per-video salient concept feeds the
// query-independent pathway, and simulated users pick shots by relevance and
// context coins. Also the summary perturbation experiments.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vsum/types.hpp"

namespace vsum {

struct SynthConfig {
  int dict_size = 20;
  int videos = 4;
  int segments_per_video = 12;
  int shots_per_segment = 10;
  int frames_per_shot = 8;
  int noise_dims = 6;  // feature dim = dict_size + noise_dims

  // Tags: each video activates a concept subset, splits it into groups, and
  // walks a Markov chain over groups; a shot draws its tags inside the
  // current group. Concepts of different groups never share a shot, which
  // populates the never-jointly query pool.
  double active_fraction = 0.75;
  int tag_groups = 2;
  double tag_persistence = 0.6;
  // Several tags per shot: uniform frame pooling dilutes each tag's feature
  // signal by the tag count, which is the regime where attention pays off.
  int tags_min = 3;
  int tags_max = 7;

  // One salient concept per video is sprinkled across groups; users include
  // its shots regardless of the query.
  double salient_prob = 0.3;

  // Each frame focuses on one tag of its shot; the focused concept fires
  // with this probability (detector reliability).
  double visibility = 0.9;
  double noise_sigma = 0.1;  // Gaussian noise on every feature entry

  int users = 3;
  double p_rel = 0.9;  // include a query-relevant shot
  double p_ctx = 0.2;  // include a salient-concept shot

  std::array<int, 4> query_counts = {15, 15, 15, 1};
  int t_presence = 1;
  std::uint64_t seed = 0;
};

SynthConfig synth_config_from_json(const std::string& text);
SynthConfig load_synth_config(const std::string& path);

// Deterministic in cfg (including cfg.seed). Fails when the requested query
// counts exceed a video's scenario pools.
Dataset generate(const SynthConfig& cfg);

// Removes round(fraction * n) uniformly chosen shots.
Summary perturb_delete(const Summary& s, double fraction, std::uint64_t seed);

// Swaps round(fraction * n) uniformly chosen shots for uniform draws from
// pool minus s. Fails when the pool is too small.
Summary perturb_replace(const Summary& s, double fraction, const std::vector<int>& pool,
                        std::uint64_t seed);

enum class PerturbMode { Delete, Replace };

PerturbMode perturb_mode_from_name(const std::string& name);

struct CurveRow {
  double fraction = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  int trials = 0;
};

// Per fraction, the mean count-mode report of evaluate(perturbed, original)
// over all refs and trials. Replacement draws from the ref's video shots
// outside the summary. Deterministic per-trial derived seeds.
std::vector<CurveRow> curve_experiment(const Dataset& d, const std::vector<Summary>& refs,
                                       const std::vector<double>& fractions, int trials,
                                       PerturbMode mode, std::uint64_t seed);

std::string curve_to_csv(const std::vector<CurveRow>& rows);

}  // namespace vsum

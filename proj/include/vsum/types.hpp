#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vsum {

// The concept vocabulary. Concepts are identified by their index into this
// dictionary everywhere past ingestion; strings only matter at the file edge.
struct ConceptDictionary {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }

  bool operator==(const ConceptDictionary&) const = default;
};

// A shot's tag set: sorted, duplicate-free concept indices.
struct SemanticVector {
  std::vector<int> concepts;

  static SemanticVector of(std::vector<int> raw);  // sorts and dedupes
  bool contains(int c) const;
  int size() const { return static_cast<int>(concepts.size()); }

  bool operator==(const SemanticVector&) const = default;
};

struct Shot {
  int index = 0;
  SemanticVector tags;
  // K frame feature vectors, all of dimension d_f. May be empty: the metric,
  // oracle, and query modules only need tags.
  std::vector<std::vector<double>> frames;

  bool operator==(const Shot&) const = default;
};

struct Video {
  std::string id;
  int segment_size = 10;
  std::vector<Shot> shots;

  int shot_count() const { return static_cast<int>(shots.size()); }
  bool has_frames() const;   // every shot carries at least one frame
  int frames_per_shot() const;  // K, or 0 when no shot has frames
  int feature_dim() const;      // d_f, or 0

  bool operator==(const Video&) const = default;
};

enum class Scenario { I, II, III, IV };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct Query {
  std::string id;
  std::string video_id;
  std::vector<int> concepts;  // sorted, duplicate-free
  std::optional<Scenario> scenario;

  bool operator==(const Query&) const = default;
};

struct Summary {
  std::string video_id;
  std::optional<std::string> query_id;
  std::string user;           // annotator label; "oracle" for oracle summaries
  std::vector<int> shots;     // sorted, duplicate-free shot indices

  int size() const { return static_cast<int>(shots.size()); }
  bool contains(int shot) const;

  bool operator==(const Summary&) const = default;
};

struct Dataset {
  ConceptDictionary dictionary;
  std::vector<Video> videos;
  std::vector<Query> queries;
  std::vector<Summary> user_summaries;
  std::vector<Summary> oracle_summaries;

  const Video* find_video(const std::string& id) const;
  const Query* find_query(const std::string& id) const;
  std::vector<const Summary*> user_summaries_for(const std::string& query_id) const;
  const Summary* oracle_summary_for(const std::string& query_id) const;

  bool operator==(const Dataset&) const = default;
};

// Throws Error ("validation error: ...") naming the offending entity.
void validate(const Dataset& d);

// Dense 0/1 vector of length dict_size; entry j = 1 iff j is in the query.
std::vector<double> indicator_vector(const Query& q, int dict_size);

// Half-open shot index range [begin, end).
struct ShotRange {
  int begin = 0;
  int end = 0;

  int length() const { return end - begin; }
  bool operator==(const ShotRange&) const = default;
};

// Consecutive, disjoint, covering ranges of segment_size shots; the last
// range may be shorter.
std::vector<ShotRange> segments(const Video& v);

std::vector<int> sorted_unique(std::vector<int> v);

}  // namespace vsum

#include "vsum/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vsum/error.hpp"

namespace vsum {

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

SemanticVector SemanticVector::of(std::vector<int> raw) {
  return SemanticVector{sorted_unique(std::move(raw))};
}

bool SemanticVector::contains(int c) const {
  return std::binary_search(concepts.begin(), concepts.end(), c);
}

bool Summary::contains(int shot) const {
  return std::binary_search(shots.begin(), shots.end(), shot);
}

bool Video::has_frames() const {
  if (shots.empty()) return false;
  for (const Shot& s : shots)
    if (s.frames.empty()) return false;
  return true;
}

int Video::frames_per_shot() const {
  for (const Shot& s : shots)
    if (!s.frames.empty()) return static_cast<int>(s.frames.size());
  return 0;
}

int Video::feature_dim() const {
  for (const Shot& s : shots)
    if (!s.frames.empty()) return static_cast<int>(s.frames.front().size());
  return 0;
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::I: return "i";
    case Scenario::II: return "ii";
    case Scenario::III: return "iii";
    case Scenario::IV: return "iv";
  }
  fail("unreachable scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "i") return Scenario::I;
  if (name == "ii") return Scenario::II;
  if (name == "iii") return Scenario::III;
  if (name == "iv") return Scenario::IV;
  fail("parse error: unknown scenario label \"" + name + "\"");
}

const Video* Dataset::find_video(const std::string& id) const {
  for (const Video& v : videos)
    if (v.id == id) return &v;
  return nullptr;
}

const Query* Dataset::find_query(const std::string& id) const {
  for (const Query& q : queries)
    if (q.id == id) return &q;
  return nullptr;
}

std::vector<const Summary*> Dataset::user_summaries_for(const std::string& query_id) const {
  std::vector<const Summary*> out;
  for (const Summary& s : user_summaries)
    if (s.query_id && *s.query_id == query_id) out.push_back(&s);
  return out;
}

const Summary* Dataset::oracle_summary_for(const std::string& query_id) const {
  for (const Summary& s : oracle_summaries)
    if (s.query_id && *s.query_id == query_id) return &s;
  return nullptr;
}

static void validate_summary(const Dataset& d, const Summary& s, const std::string& where) {
  const Query* q = s.query_id ? d.find_query(*s.query_id) : nullptr;
  if (s.query_id && !q)
    fail("validation error: " + where + " references unknown query \"" + *s.query_id + "\"");
  const Video* v = d.find_video(s.video_id);
  if (!v)
    fail("validation error: " + where + " references unknown video \"" + s.video_id + "\"");
  if (q && q->video_id != s.video_id)
    fail("validation error: " + where + ": query \"" + q->id + "\" belongs to video \"" +
         q->video_id + "\", not \"" + s.video_id + "\"");
  std::set<int> seen;
  for (int shot : s.shots) {
    if (shot < 0 || shot >= v->shot_count())
      fail("validation error: " + where + ": shot index " + std::to_string(shot) +
           " out of range for video \"" + v->id + "\" (" + std::to_string(v->shot_count()) +
           " shots)");
    if (!seen.insert(shot).second)
      fail("validation error: " + where + ": duplicate shot index " + std::to_string(shot));
  }
  if (!std::is_sorted(s.shots.begin(), s.shots.end()))
    fail("validation error: " + where + ": shot indices not sorted");
}

void validate(const Dataset& d) {
  if (d.dictionary.size() < 1) fail("validation error: dictionary is empty");
  std::set<std::string> names;
  for (const std::string& n : d.dictionary.names) {
    if (n.empty()) fail("validation error: dictionary contains an empty concept name");
    if (!names.insert(n).second)
      fail("validation error: duplicate concept name \"" + n + "\"");
  }

  std::set<std::string> video_ids;
  for (const Video& v : d.videos) {
    const std::string where = "video \"" + v.id + "\"";
    if (v.id.empty()) fail("validation error: video with empty id");
    if (!video_ids.insert(v.id).second) fail("validation error: duplicate " + where);
    if (v.segment_size < 1)
      fail("validation error: " + where + ": segment_size must be >= 1");
    int k = 0, d_f = 0;
    for (std::size_t i = 0; i < v.shots.size(); ++i) {
      const Shot& s = v.shots[i];
      const std::string shot_where = where + " shot " + std::to_string(i);
      if (s.index != static_cast<int>(i))
        fail("validation error: " + shot_where + ": index " + std::to_string(s.index) +
             " is not contiguous");
      std::set<int> seen;
      for (int c : s.tags.concepts) {
        if (c < 0 || c >= d.dictionary.size())
          fail("validation error: " + shot_where + ": concept index " + std::to_string(c) +
               " out of range (dictionary has " + std::to_string(d.dictionary.size()) +
               " entries)");
        if (!seen.insert(c).second)
          fail("validation error: " + shot_where + ": duplicate concept index " +
               std::to_string(c));
      }
      if (!s.frames.empty()) {
        if (k == 0) {
          k = static_cast<int>(s.frames.size());
          d_f = static_cast<int>(s.frames.front().size());
        } else if (static_cast<int>(s.frames.size()) != k) {
          fail("validation error: " + shot_where + ": has " +
               std::to_string(s.frames.size()) + " frames, expected " + std::to_string(k));
        }
        for (const auto& f : s.frames) {
          if (static_cast<int>(f.size()) != d_f)
            fail("validation error: " + shot_where + ": frame dimension " +
                 std::to_string(f.size()) + " != " + std::to_string(d_f));
          for (double x : f)
            if (!std::isfinite(x))
              fail("validation error: " + shot_where + ": non-finite frame feature");
        }
      }
    }
  }

  std::set<std::string> query_ids;
  for (const Query& q : d.queries) {
    const std::string where = "query \"" + q.id + "\"";
    if (q.id.empty()) fail("validation error: query with empty id");
    if (!query_ids.insert(q.id).second) fail("validation error: duplicate " + where);
    if (!d.find_video(q.video_id))
      fail("validation error: " + where + " references unknown video \"" + q.video_id + "\"");
    if (q.concepts.empty() || static_cast<int>(q.concepts.size()) > d.dictionary.size())
      fail("validation error: " + where + ": concept count must be in [1, " +
           std::to_string(d.dictionary.size()) + "]");
    std::set<int> seen;
    for (int c : q.concepts) {
      if (c < 0 || c >= d.dictionary.size())
        fail("validation error: " + where + ": concept index " + std::to_string(c) +
             " out of range");
      if (!seen.insert(c).second)
        fail("validation error: " + where + ": duplicate concept index " + std::to_string(c));
    }
    if (!std::is_sorted(q.concepts.begin(), q.concepts.end()))
      fail("validation error: " + where + ": concept indices not sorted");
  }

  for (std::size_t i = 0; i < d.user_summaries.size(); ++i) {
    const Summary& s = d.user_summaries[i];
    validate_summary(d, s,
                     "user_summaries[" + std::to_string(i) + "] (query \"" +
                         (s.query_id ? *s.query_id : std::string("-")) + "\", user \"" +
                         s.user + "\")");
  }
  for (std::size_t i = 0; i < d.oracle_summaries.size(); ++i) {
    const Summary& s = d.oracle_summaries[i];
    validate_summary(d, s,
                     "oracle_summaries[" + std::to_string(i) + "] (query \"" +
                         (s.query_id ? *s.query_id : std::string("-")) + "\")");
  }
}

std::vector<double> indicator_vector(const Query& q, int dict_size) {
  std::vector<double> v(static_cast<std::size_t>(dict_size), 0.0);
  for (int c : q.concepts) {
    if (c < 0 || c >= dict_size)
      fail("validation error: query concept index " + std::to_string(c) +
           " out of range for dictionary size " + std::to_string(dict_size));
    v[static_cast<std::size_t>(c)] = 1.0;
  }
  return v;
}

std::vector<ShotRange> segments(const Video& v) {
  std::vector<ShotRange> out;
  const int n = v.shot_count();
  for (int b = 0; b < n; b += v.segment_size)
    out.push_back({b, std::min(b + v.segment_size, n)});
  return out;
}

}  // namespace vsum

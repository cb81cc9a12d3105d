#include "vsum/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vsum/error.hpp"

namespace vsum {

using ojson = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io error: cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("io error: cannot open \"" + path + "\" for writing");
  out << text;
  if (!out) fail("io error: write to \"" + path + "\" failed");
}

namespace {

ojson parse(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("parse error: " + what + ": " + e.what());
  }
}

const ojson& require(const ojson& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail("parse error: " + where + ": missing key \"" + key + "\"");
  return *it;
}

std::vector<int> int_array(const ojson& j, const std::string& where) {
  if (!j.is_array()) fail("parse error: " + where + ": expected an array of integers");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number_integer()) fail("parse error: " + where + ": expected integer entries");
    out.push_back(x.get<int>());
  }
  return out;
}

}  // namespace

std::string dataset_to_json(const Dataset& d) {
  ojson j;
  j["dictionary"] = d.dictionary.names;

  ojson videos = ojson::array();
  for (const Video& v : d.videos) {
    ojson jv;
    jv["id"] = v.id;
    jv["segment_size"] = v.segment_size;
    ojson shots = ojson::array();
    for (const Shot& s : v.shots) {
      ojson js;
      js["concepts"] = s.tags.concepts;
      js["frames"] = s.frames;
      shots.push_back(std::move(js));
    }
    jv["shots"] = std::move(shots);
    videos.push_back(std::move(jv));
  }
  j["videos"] = std::move(videos);

  ojson queries = ojson::array();
  for (const Query& q : d.queries) {
    ojson jq;
    jq["id"] = q.id;
    jq["video"] = q.video_id;
    jq["concepts"] = q.concepts;
    if (q.scenario)
      jq["scenario"] = scenario_name(*q.scenario);
    else
      jq["scenario"] = nullptr;
    queries.push_back(std::move(jq));
  }
  j["queries"] = std::move(queries);

  ojson users = ojson::array();
  for (const Summary& s : d.user_summaries) {
    ojson js;
    js["query"] = s.query_id ? ojson(*s.query_id) : ojson(nullptr);
    js["user"] = s.user;
    js["shots"] = s.shots;
    users.push_back(std::move(js));
  }
  j["user_summaries"] = std::move(users);

  if (!d.oracle_summaries.empty()) {
    ojson oracles = ojson::array();
    for (const Summary& s : d.oracle_summaries) {
      ojson js;
      js["query"] = s.query_id ? ojson(*s.query_id) : ojson(nullptr);
      js["user"] = s.user;
      js["shots"] = s.shots;
      oracles.push_back(std::move(js));
    }
    j["oracle_summaries"] = std::move(oracles);
  }

  return j.dump(2) + "\n";
}

namespace {

Summary summary_from_json(const Dataset& d, const ojson& js, const std::string& where) {
  Summary s;
  const ojson& q = require(js, "query", where);
  if (!q.is_null()) {
    if (!q.is_string()) fail("parse error: " + where + ": \"query\" must be a string or null");
    s.query_id = q.get<std::string>();
    const Query* qq = d.find_query(*s.query_id);
    // video resolved through the query when possible; validation reports
    // dangling references with the entity name
    s.video_id = qq ? qq->video_id : "";
  }
  auto itv = js.find("video");
  if (itv != js.end() && itv->is_string()) s.video_id = itv->get<std::string>();
  const ojson& ju = require(js, "user", where);
  if (!ju.is_string()) fail("parse error: " + where + ": \"user\" must be a string");
  s.user = ju.get<std::string>();
  const std::vector<int> raw = int_array(require(js, "shots", where), where + ".shots");
  s.shots = sorted_unique(raw);
  if (raw.size() != s.shots.size())
    fail("validation error: " + where + ": duplicate shot index in summary");
  return s;
}

}  // namespace

Dataset dataset_from_json(const std::string& text) {
  const ojson j = parse(text, "dataset");
  if (!j.is_object()) fail("parse error: dataset: top level must be an object");

  Dataset d;
  const ojson& dict = require(j, "dictionary", "dataset");
  if (!dict.is_array()) fail("parse error: dataset.dictionary must be an array of strings");
  for (const auto& n : dict) {
    if (!n.is_string()) fail("parse error: dataset.dictionary entries must be strings");
    d.dictionary.names.push_back(n.get<std::string>());
  }

  for (const ojson& jv : require(j, "videos", "dataset")) {
    Video v;
    v.id = require(jv, "id", "video").get<std::string>();
    v.segment_size = require(jv, "segment_size", "video \"" + v.id + "\"").get<int>();
    int idx = 0;
    for (const ojson& js : require(jv, "shots", "video \"" + v.id + "\"")) {
      const std::string where = "video \"" + v.id + "\" shot " + std::to_string(idx);
      Shot s;
      s.index = idx++;
      const std::vector<int> raw = int_array(require(js, "concepts", where), where + ".concepts");
      s.tags.concepts = sorted_unique(raw);
      if (s.tags.concepts.size() != raw.size())
        fail("validation error: " + where + ": duplicate concept index in shot tags");
      const ojson& frames = require(js, "frames", where);
      if (!frames.is_array()) fail("parse error: " + where + ".frames must be an array");
      for (const auto& jf : frames) {
        if (!jf.is_array()) fail("parse error: " + where + ".frames entries must be arrays");
        std::vector<double> f;
        f.reserve(jf.size());
        for (const auto& x : jf) {
          if (!x.is_number()) fail("parse error: " + where + ": frame entries must be numbers");
          f.push_back(x.get<double>());
        }
        s.frames.push_back(std::move(f));
      }
      v.shots.push_back(std::move(s));
    }
    d.videos.push_back(std::move(v));
  }

  for (const ojson& jq : require(j, "queries", "dataset")) {
    Query q;
    q.id = require(jq, "id", "query").get<std::string>();
    const std::string where = "query \"" + q.id + "\"";
    q.video_id = require(jq, "video", where).get<std::string>();
    const std::vector<int> raw = int_array(require(jq, "concepts", where), where + ".concepts");
    q.concepts = sorted_unique(raw);
    if (q.concepts.size() != raw.size())
      fail("validation error: " + where + ": duplicate concept index");
    const ojson& sc = require(jq, "scenario", where);
    if (!sc.is_null()) q.scenario = scenario_from_name(sc.get<std::string>());
    d.queries.push_back(std::move(q));
  }

  int idx = 0;
  for (const ojson& js : require(j, "user_summaries", "dataset"))
    d.user_summaries.push_back(
        summary_from_json(d, js, "user_summaries[" + std::to_string(idx++) + "]"));

  if (j.contains("oracle_summaries")) {
    idx = 0;
    for (const ojson& js : j["oracle_summaries"])
      d.oracle_summaries.push_back(
          summary_from_json(d, js, "oracle_summaries[" + std::to_string(idx++) + "]"));
  }

  validate(d);
  return d;
}

Dataset load_dataset(const std::string& path) { return dataset_from_json(read_text_file(path)); }

void save_dataset(const Dataset& d, const std::string& path) {
  validate(d);
  write_text_file(path, dataset_to_json(d));
}

std::vector<Summary> load_summaries(const std::string& path) {
  const ojson j = parse(read_text_file(path), "summary file");
  std::vector<Summary> out;
  for (const ojson& js : require(j, "summaries", "summary file")) {
    Summary s;
    s.query_id = require(js, "query", "summary").get<std::string>();
    s.video_id = require(js, "video", "summary").get<std::string>();
    s.user = js.value("user", "system");
    s.shots = sorted_unique(int_array(require(js, "shots", "summary"), "summary.shots"));
    out.push_back(std::move(s));
  }
  return out;
}

void save_summaries(const std::vector<Summary>& summaries, const std::string& path) {
  ojson j;
  ojson arr = ojson::array();
  for (const Summary& s : summaries) {
    ojson js;
    js["query"] = s.query_id ? ojson(*s.query_id) : ojson(nullptr);
    js["video"] = s.video_id;
    js["user"] = s.user;
    js["shots"] = s.shots;
    arr.push_back(std::move(js));
  }
  j["summaries"] = std::move(arr);
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace vsum

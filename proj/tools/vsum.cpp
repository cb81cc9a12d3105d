// Command line front end. Every subcommand exits 0 on success; failures
// print a single "error: ..." line on stderr and exit nonzero.
#include <CLI11.hpp>

#include <array>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vsum/dataset_io.hpp"
#include "vsum/error.hpp"
#include "vsum/metric.hpp"
#include "vsum/model.hpp"
#include "vsum/oracle.hpp"
#include "vsum/query_builder.hpp"
#include "vsum/synth.hpp"
#include "vsum/trainer.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) parts.push_back(item);
  return parts;
}

std::vector<double> parse_fraction_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& part : split_commas(text)) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
      value = std::stod(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != part.size() || part.empty())
      vsum::fail("parse error: bad fraction \"" + part + "\" in --fractions");
    out.push_back(value);
  }
  if (out.empty()) vsum::fail("parse error: --fractions needs at least one value");
  return out;
}

std::array<int, 4> parse_count_list(const std::string& text) {
  std::vector<std::string> parts = split_commas(text);
  if (parts.size() != 4)
    vsum::fail("parse error: --counts needs four comma-separated integers");
  std::array<int, 4> out{};
  for (int s = 0; s < 4; ++s) {
    std::size_t pos = 0;
    int value = 0;
    try {
      value = std::stoi(parts[s], &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != parts[s].size() || parts[s].empty() || value < 0)
      vsum::fail("parse error: bad count \"" + parts[s] + "\" in --counts");
    out[static_cast<std::size_t>(s)] = value;
  }
  return out;
}

vsum::MatchMode match_mode_from_name(const std::string& name) {
  if (name == "count") return vsum::MatchMode::Count;
  if (name == "weight") return vsum::MatchMode::Weight;
  vsum::fail("validation error: unknown match mode \"" + name + "\" (count or weight)");
}

const vsum::Video& video_or_fail(const vsum::Dataset& d, const std::string& id) {
  const vsum::Video* v = d.find_video(id);
  if (v == nullptr) vsum::fail("validation error: unknown video \"" + id + "\"");
  return *v;
}

const vsum::Query& query_or_fail(const vsum::Dataset& d, const std::string& id) {
  const vsum::Query* q = d.find_query(id);
  if (q == nullptr) vsum::fail("validation error: unknown query \"" + id + "\"");
  return *q;
}

std::vector<vsum::Summary> deref(const std::vector<const vsum::Summary*>& ptrs) {
  std::vector<vsum::Summary> out;
  out.reserve(ptrs.size());
  for (const vsum::Summary* s : ptrs) out.push_back(*s);
  return out;
}

void run_gen(const std::string& config, const std::string& out, std::uint64_t seed) {
  vsum::SynthConfig cfg = vsum::load_synth_config(config);
  cfg.seed = seed;
  vsum::Dataset d = vsum::generate(cfg);
  vsum::save_dataset(d, out);
}

void run_queries(const std::string& dataset, const std::string& video, int t_presence,
                 std::uint64_t seed, const std::string& counts_text) {
  vsum::Dataset d = vsum::load_dataset(dataset);
  const vsum::Video& v = video_or_fail(d, video);
  std::array<int, 4> counts = parse_count_list(counts_text);
  std::vector<vsum::Query> fresh =
      vsum::build_queries(v, d.dictionary.size(), counts, t_presence, seed);
  d.queries.insert(d.queries.end(), fresh.begin(), fresh.end());
  vsum::save_dataset(d, dataset);  // validates; rejects colliding query ids
}

void run_oracle(const std::string& dataset, const std::string& pool_name,
                const std::string& out) {
  vsum::Dataset d = vsum::load_dataset(dataset);
  vsum::CandidatePool pool = vsum::pool_from_name(pool_name);
  d.oracle_summaries.clear();
  for (const vsum::Query& q : d.queries) {
    std::vector<vsum::Summary> refs = deref(d.user_summaries_for(q.id));
    if (refs.empty()) continue;  // nothing to aggregate
    const vsum::Video& v = video_or_fail(d, q.video_id);
    d.oracle_summaries.push_back(vsum::build_oracle(v, q, refs, pool));
  }
  vsum::save_dataset(d, out);
}

void run_eval(const std::string& dataset, const std::string& system,
              const std::string& mode_name, const std::string& out) {
  vsum::Dataset d = vsum::load_dataset(dataset);
  vsum::MatchMode mode = match_mode_from_name(mode_name);
  std::vector<vsum::Summary> sys = vsum::load_summaries(system);
  std::ostringstream csv;
  csv << "query,video,mode,precision,recall,f1\n";
  csv << std::setprecision(17);
  for (const vsum::Summary& s : sys) {
    const std::string& qid = s.query_id.value();  // load_summaries guarantees it
    const vsum::Query& q = query_or_fail(d, qid);
    if (q.video_id != s.video_id)
      vsum::fail("validation error: summary for query \"" + qid + "\" names video \"" +
                 s.video_id + "\" but the query belongs to \"" + q.video_id + "\"");
    const vsum::Video& v = video_or_fail(d, s.video_id);
    std::vector<vsum::Summary> refs = deref(d.user_summaries_for(qid));
    if (refs.empty())
      vsum::fail("validation error: no user summaries for query \"" + qid + "\"");
    vsum::EvalReport r = vsum::evaluate_multi(v, s.shots, refs, mode);
    csv << qid << ',' << s.video_id << ',' << mode_name << ',' << r.precision << ','
        << r.recall << ',' << r.f1 << '\n';
  }
  vsum::write_text_file(out, csv.str());
}

void run_train(const std::string& dataset, const std::string& test_video,
               const std::string& val_video, const std::string& config,
               const std::string& out, const std::string& log) {
  vsum::Dataset d = vsum::load_dataset(dataset);
  vsum::TrainConfig cfg = vsum::load_train_config(config);
  vsum::Dataset train, val, test;
  vsum::split_leave_one_out(d, test_video, val_video, train, val, test);
  vsum::TrainResult result = vsum::train(train, val, cfg);
  vsum::save_checkpoint(result.params, out);
  vsum::write_history_csv(result.history, log);
  vsum::EvalMean test_mean = vsum::evaluate_model(result.params, test);
  std::cout << "selected_epoch=" << result.history.selected_epoch
            << " test_precision=" << test_mean.precision
            << " test_recall=" << test_mean.recall << " test_f1=" << test_mean.f1
            << "\n";
}

void run_summarize(const std::string& checkpoint, const std::string& dataset,
                   const std::string& video, const std::string& query,
                   const std::string& out) {
  vsum::ModelParams params = vsum::load_checkpoint(checkpoint);
  vsum::Dataset d = vsum::load_dataset(dataset);
  const vsum::Video& v = video_or_fail(d, video);
  const vsum::Query& q = query_or_fail(d, query);
  if (q.video_id != v.id)
    vsum::fail("validation error: query \"" + query + "\" belongs to video \"" +
               q.video_id + "\", not \"" + v.id + "\"");
  vsum::Selection sel = vsum::summarize(params, v, q);
  vsum::Summary s;
  s.video_id = v.id;
  s.query_id = q.id;
  s.user = "system";
  s.shots = sel.flattened();
  vsum::save_summaries({s}, out);
}

void run_perturb(const std::string& dataset, const std::string& mode_name,
                 const std::string& fractions_text, int trials, std::uint64_t seed,
                 const std::string& out) {
  vsum::Dataset d = vsum::load_dataset(dataset);
  if (d.user_summaries.empty())
    vsum::fail("validation error: dataset has no user summaries to perturb");
  vsum::PerturbMode mode = vsum::perturb_mode_from_name(mode_name);
  std::vector<double> fractions = parse_fraction_list(fractions_text);
  std::vector<vsum::CurveRow> rows =
      vsum::curve_experiment(d, d.user_summaries, fractions, trials, mode, seed);
  vsum::write_text_file(out, vsum::curve_to_csv(rows));
}

void run_gradcheck(const std::string& config, std::uint64_t seed) {
  vsum::GradCheckConfig cfg = vsum::load_grad_check_config(config);
  vsum::GradCheckReport report = vsum::gradient_check(cfg, seed);
  std::cout << std::setprecision(6) << "gradcheck instances=" << report.instances
            << " max_rel_error=" << report.max_rel_error << " A=" << report.err_a
            << " B=" << report.err_b << " C=" << report.err_c << " D=" << report.err_d
            << " tolerance=" << cfg.tolerance
            << (report.passed ? " PASS" : " FAIL") << "\n";
  if (!report.passed)
    vsum::fail("numerical error: gradient check exceeded tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query-focused video summarization toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::simple);

  std::string config, out, dataset, video, query, system, checkpoint;
  std::string test_video, val_video, log_path;
  std::string pool_name = "union";
  std::string mode_name = "count";
  std::string counts_text = "15,15,15,1";
  std::string fractions_text;
  int t_presence = 1;
  int trials = 0;
  std::uint64_t seed = 0;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config, "generator config JSON")->required();
  gen->add_option("--out", out, "dataset output path")->required();
  gen->add_option("--seed", seed, "RNG seed")->required();
  gen->callback([&] { run_gen(config, out, seed); });

  CLI::App* queries = app.add_subcommand("queries", "append concept-pair queries to a dataset");
  queries->add_option("--dataset", dataset, "dataset path, updated in place")->required();
  queries->add_option("--video", video, "video id")->required();
  queries->add_option("--t-presence", t_presence, "presence threshold")->required();
  queries->add_option("--seed", seed, "RNG seed")->required();
  queries->add_option("--counts", counts_text, "queries per scenario, default 15,15,15,1");
  queries->callback([&] { run_queries(dataset, video, t_presence, seed, counts_text); });

  CLI::App* oracle = app.add_subcommand("oracle", "build oracle summaries from user summaries");
  oracle->add_option("--dataset", dataset, "dataset path")->required();
  oracle->add_option("--pool", pool_name, "candidate pool: union or all");
  oracle->add_option("--out", out, "dataset output path")->required();
  oracle->callback([&] { run_oracle(dataset, pool_name, out); });

  CLI::App* eval = app.add_subcommand("eval", "score system summaries against user summaries");
  eval->add_option("--dataset", dataset, "dataset path")->required();
  eval->add_option("--system", system, "system summary file")->required();
  eval->add_option("--mode", mode_name, "matching mode: count or weight");
  eval->add_option("--out", out, "CSV output path")->required();
  eval->callback([&] { run_eval(dataset, system, mode_name, out); });

  CLI::App* train = app.add_subcommand("train", "train the summarizer");
  train->add_option("--dataset", dataset, "dataset path")->required();
  train->add_option("--test", test_video, "held-out test video id")->required();
  train->add_option("--val", val_video, "validation video id")->required();
  train->add_option("--config", config, "training config JSON")->required();
  train->add_option("--out", out, "checkpoint output path")->required();
  train->add_option("--log", log_path, "epoch history CSV path")->required();
  train->callback([&] { run_train(dataset, test_video, val_video, config, out, log_path); });

  CLI::App* summarize = app.add_subcommand("summarize", "run inference for one query");
  summarize->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  summarize->add_option("--dataset", dataset, "dataset path")->required();
  summarize->add_option("--video", video, "video id")->required();
  summarize->add_option("--query", query, "query id")->required();
  summarize->add_option("--out", out, "summary output path")->required();
  summarize->callback([&] { run_summarize(checkpoint, dataset, video, query, out); });

  CLI::App* perturb = app.add_subcommand("perturb", "degrade user summaries and score the damage");
  perturb->add_option("--dataset", dataset, "dataset path")->required();
  perturb->add_option("--mode", mode_name, "delete or replace")->required();
  perturb->add_option("--fractions", fractions_text, "comma-separated fractions")->required();
  perturb->add_option("--trials", trials, "trials per fraction")->required();
  perturb->add_option("--seed", seed, "RNG seed")->required();
  perturb->add_option("--out", out, "CSV output path")->required();
  perturb->callback([&] { run_perturb(dataset, mode_name, fractions_text, trials, seed, out); });

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--config", config, "gradcheck config JSON")->required();
  gradcheck->add_option("--seed", seed, "RNG seed")->required();
  gradcheck->callback([&] { run_gradcheck(config, seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const vsum::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

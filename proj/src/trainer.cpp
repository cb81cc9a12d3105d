#include "vsum/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vsum/dataset_io.hpp"
#include "vsum/error.hpp"
#include "vsum/metric.hpp"
#include "vsum/oracle.hpp"
#include "vsum/rng.hpp"

namespace vsum {

namespace {

void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                      const char* what) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      fail(std::string("parse error: ") + what + ": unknown key \"" + key + "\"");
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: train config: ") + e.what());
  }
  check_known_keys(j, {"lr", "epochs", "minibatch", "h", "h_o", "h_L", "lambda",
                       "init_scale", "seed", "clip_norm", "no_attention", "no_emb_d",
                       "target"},
                   "train config");
  TrainConfig cfg;
  try {
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.minibatch = j.value("minibatch", cfg.minibatch);
    cfg.h = j.value("h", cfg.h);
    cfg.h_o = j.value("h_o", cfg.h_o);
    cfg.h_L = j.value("h_L", cfg.h_L);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.init_scale = j.value("init_scale", cfg.init_scale);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
    cfg.no_attention = j.value("no_attention", cfg.no_attention);
    cfg.no_emb_d = j.value("no_emb_d", cfg.no_emb_d);
    const std::string target = j.value("target", std::string("oracle"));
    if (target == "oracle")
      cfg.target = TrainTarget::Oracle;
    else if (target == "users")
      cfg.target = TrainTarget::Users;
    else
      fail("parse error: train config: unknown target \"" + target + "\"");
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: train config: ") + e.what());
  }
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json(read_text_file(path));
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "epoch,train_loglik,val_precision,val_recall,val_f1\n";
  for (const EpochRecord& r : h.epochs)
    out << r.epoch << ',' << r.train_loglik << ',' << r.val_precision << ','
        << r.val_recall << ',' << r.val_f1 << '\n';
  write_text_file(path, out.str());
}

void split_leave_one_out(const Dataset& d, const std::string& test_video,
                         const std::string& val_video, Dataset& train, Dataset& val,
                         Dataset& test) {
  if (test_video == val_video)
    fail("validation error: test and validation video must differ");
  if (d.videos.size() < 3)
    fail("validation error: leave-one-out split needs at least 3 videos, got " +
         std::to_string(d.videos.size()));
  if (!d.find_video(test_video))
    fail("validation error: unknown test video \"" + test_video + "\"");
  if (!d.find_video(val_video))
    fail("validation error: unknown validation video \"" + val_video + "\"");

  train = Dataset{};
  val = Dataset{};
  test = Dataset{};
  train.dictionary = val.dictionary = test.dictionary = d.dictionary;

  auto bucket_of = [&](const std::string& video_id) -> Dataset& {
    if (video_id == test_video) return test;
    if (video_id == val_video) return val;
    return train;
  };
  for (const Video& v : d.videos) bucket_of(v.id).videos.push_back(v);
  for (const Query& q : d.queries) bucket_of(q.video_id).queries.push_back(q);
  for (const Summary& s : d.user_summaries) bucket_of(s.video_id).user_summaries.push_back(s);
  for (const Summary& s : d.oracle_summaries)
    bucket_of(s.video_id).oracle_summaries.push_back(s);
}

namespace {

struct TrainPair {
  const Video* video = nullptr;
  const Query* query = nullptr;
  Summary target;
};

std::vector<Summary> refs_for(const Dataset& d, const std::string& query_id) {
  std::vector<Summary> refs;
  for (const Summary* s : d.user_summaries_for(query_id)) refs.push_back(*s);
  return refs;
}

std::vector<TrainPair> collect_pairs(const Dataset& d, TrainTarget target) {
  std::vector<TrainPair> pairs;
  for (const Query& q : d.queries) {
    const Video* v = d.find_video(q.video_id);
    if (!v) fail("validation error: query \"" + q.id + "\" names unknown video");
    if (!v->has_frames())
      fail("validation error: training video \"" + v->id + "\" has no frame features");
    const std::vector<Summary> refs = refs_for(d, q.id);
    if (target == TrainTarget::Users) {
      if (refs.empty())
        fail("validation error: query \"" + q.id + "\" has no reference summaries");
      for (const Summary& r : refs) pairs.push_back({v, &q, r});
      continue;
    }
    TrainPair pair{v, &q, {}};
    if (const Summary* oracle = d.oracle_summary_for(q.id)) {
      pair.target = *oracle;
    } else {
      if (refs.empty())
        fail("validation error: query \"" + q.id + "\" has no reference summaries");
      pair.target = build_oracle(*v, q, refs);
    }
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) fail("validation error: empty training set");
  return pairs;
}

void check_train_config(const TrainConfig& cfg) {
  if (cfg.lr <= 0.0) fail("validation error: learning rate must be > 0");
  if (cfg.epochs < 1) fail("validation error: epochs must be >= 1");
  if (cfg.minibatch < 1) fail("validation error: minibatch must be >= 1");
  if (cfg.h < 1 || cfg.h_o < 1 || cfg.h_L < 1)
    fail("validation error: embedding dims must be >= 1");
  if (cfg.lambda < 0.0) fail("validation error: lambda must be >= 0");
  if (cfg.init_scale <= 0.0) fail("validation error: init scale must be > 0");
  if (cfg.clip_norm <= 0.0) fail("validation error: clip norm must be > 0");
}

}  // namespace

EvalMean evaluate_model(const ModelParams& p, const Dataset& d) {
  if (d.queries.empty()) fail("validation error: dataset has no queries to evaluate");
  EvalMean mean;
  for (const Query& q : d.queries) {
    const Video* v = d.find_video(q.video_id);
    if (!v) fail("validation error: query \"" + q.id + "\" names unknown video");
    const std::vector<Summary> refs = refs_for(d, q.id);
    if (refs.empty())
      fail("validation error: query \"" + q.id + "\" has no reference summaries");
    const Selection sel = summarize(p, *v, q);
    const EvalReport r = evaluate_multi(*v, sel.flattened(), refs, MatchMode::Count);
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
  }
  const double n = static_cast<double>(d.queries.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

TrainResult train(const Dataset& d_train, const Dataset& d_val, const TrainConfig& cfg) {
  check_train_config(cfg);
  const std::vector<TrainPair> pairs = collect_pairs(d_train, cfg.target);
  if (d_val.queries.empty()) fail("validation error: validation set has no queries");

  const Video& first = *pairs.front().video;
  const int d_f = first.feature_dim();
  const int d_q = d_train.dictionary.size();
  const int K = first.frames_per_shot();
  for (const TrainPair& pair : pairs)
    if (pair.video->feature_dim() != d_f)
      fail("validation error: videos disagree on feature dimension");

  ModelParams params = init_params({d_f, d_q, K, cfg.h, cfg.h_o, cfg.h_L}, cfg.lambda,
                                   cfg.init_scale, cfg.seed, cfg.no_attention,
                                   cfg.no_emb_d);

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  result.params = params;
  double best_f1 = -1.0;
  const bool update_d = !cfg.no_emb_d;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_ll = 0.0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      Matrix da(params.A.rows(), params.A.cols());
      Matrix db(params.B.rows(), params.B.cols());
      Matrix dc(params.C.rows(), params.C.cols());
      Matrix dd(params.D.rows(), params.D.cols());
      for (std::size_t i = start; i < stop; ++i) {
        const TrainPair& pair = pairs[order[i]];
        const Gradients g =
            grad_log_likelihood(params, *pair.video, *pair.query, pair.target);
        if (!std::isfinite(g.log_likelihood))
          fail("numerical error: non-finite loss at epoch " + std::to_string(epoch) +
               ", pair \"" + pair.query->id + "\"");
        epoch_ll += g.log_likelihood;
        axpy(da, g.dA, 1.0);
        axpy(db, g.dB, 1.0);
        axpy(dc, g.dC, 1.0);
        axpy(dd, g.dD, 1.0);
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      double norm_sq = norm2_sq(da) + norm2_sq(db) + norm2_sq(dc);
      if (update_d) norm_sq += norm2_sq(dd);
      norm_sq *= inv_batch * inv_batch;
      double scale = cfg.lr * inv_batch;
      const double norm = std::sqrt(norm_sq);
      if (norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
      axpy(params.A, da, scale);
      axpy(params.B, db, scale);
      axpy(params.C, dc, scale);
      if (update_d) axpy(params.D, dd, scale);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loglik = epoch_ll / static_cast<double>(pairs.size());
    const EvalMean val = evaluate_model(params, d_val);
    rec.val_precision = val.precision;
    rec.val_recall = val.recall;
    rec.val_f1 = val.f1;
    result.history.epochs.push_back(rec);

    if (val.f1 > best_f1) {
      best_f1 = val.f1;
      result.params = params;
      result.history.selected_epoch = epoch;
    }
  }
  return result;
}

GradCheckConfig grad_check_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: gradient check config: ") + e.what());
  }
  check_known_keys(j, {"d_f", "d_q", "K", "h", "h_o", "h_L", "shots", "segment_size",
                       "lambda", "init_scale", "fd_step", "tolerance", "instances",
                       "no_attention", "no_emb_d"},
                   "gradient check config");
  GradCheckConfig cfg;
  try {
    cfg.dims.d_f = j.value("d_f", cfg.dims.d_f);
    cfg.dims.d_q = j.value("d_q", cfg.dims.d_q);
    cfg.dims.K = j.value("K", cfg.dims.K);
    cfg.dims.h = j.value("h", cfg.dims.h);
    cfg.dims.h_o = j.value("h_o", cfg.dims.h_o);
    cfg.dims.h_L = j.value("h_L", cfg.dims.h_L);
    cfg.shots = j.value("shots", cfg.shots);
    cfg.segment_size = j.value("segment_size", cfg.segment_size);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.init_scale = j.value("init_scale", cfg.init_scale);
    cfg.fd_step = j.value("fd_step", cfg.fd_step);
    cfg.tolerance = j.value("tolerance", cfg.tolerance);
    cfg.instances = j.value("instances", cfg.instances);
    cfg.no_attention = j.value("no_attention", cfg.no_attention);
    cfg.no_emb_d = j.value("no_emb_d", cfg.no_emb_d);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: gradient check config: ") + e.what());
  }
  return cfg;
}

GradCheckConfig load_grad_check_config(const std::string& path) {
  return grad_check_config_from_json(read_text_file(path));
}

namespace {

// One random (video, query, summary) instance for the checker.
struct CheckInstance {
  Video video;
  Query query;
  Summary summary;
};

CheckInstance make_instance(const GradCheckConfig& cfg, Rng& rng) {
  CheckInstance inst;
  inst.video.id = "gradcheck";
  inst.video.segment_size = cfg.segment_size;
  for (int i = 0; i < cfg.shots; ++i) {
    Shot s;
    s.index = i;
    for (int k = 0; k < cfg.dims.K; ++k) {
      Vec f(cfg.dims.d_f);
      for (double& x : f) x = rng.normal();
      s.frames.push_back(std::move(f));
    }
    inst.video.shots.push_back(std::move(s));
  }
  inst.query.id = "gradcheck";
  inst.query.video_id = inst.video.id;
  const int c1 = rng.uniform_int(cfg.dims.d_q);
  int c2 = rng.uniform_int(cfg.dims.d_q - 1);
  if (c2 >= c1) ++c2;
  inst.query.concepts = sorted_unique({c1, c2});
  inst.summary.video_id = inst.video.id;
  inst.summary.user = "gradcheck";
  for (int i = 0; i < cfg.shots; ++i)
    if (rng.bernoulli(0.5)) inst.summary.shots.push_back(i);
  return inst;
}

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckReport gradient_check(const GradCheckConfig& cfg, std::uint64_t seed) {
  if (cfg.instances < 1) fail("validation error: instances must be >= 1");
  if (cfg.fd_step <= 0.0) fail("validation error: finite-difference step must be > 0");
  GradCheckReport report;
  report.instances = cfg.instances;

  for (int inst_i = 0; inst_i < cfg.instances; ++inst_i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(inst_i) + 1));
    const CheckInstance inst = make_instance(cfg, rng);
    ModelParams params =
        init_params(cfg.dims, cfg.lambda, cfg.init_scale, rng.next_u64(),
                    cfg.no_attention, cfg.no_emb_d);

    const Gradients g = grad_log_likelihood(params, inst.video, inst.query, inst.summary);

    auto check_matrix = [&](Matrix ModelParams::* field, const Matrix& analytic,
                            double& worst) {
      Matrix& m = params.*field;
      for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
          const double saved = m(i, j);
          m(i, j) = saved + cfg.fd_step;
          const double up = seq_log_likelihood(params, inst.video, inst.query, inst.summary);
          m(i, j) = saved - cfg.fd_step;
          const double down =
              seq_log_likelihood(params, inst.video, inst.query, inst.summary);
          m(i, j) = saved;
          const double numeric = (up - down) / (2.0 * cfg.fd_step);
          worst = std::max(worst, rel_error(analytic(i, j), numeric));
        }
      }
    };
    check_matrix(&ModelParams::A, g.dA, report.err_a);
    check_matrix(&ModelParams::B, g.dB, report.err_b);
    check_matrix(&ModelParams::C, g.dC, report.err_c);
    if (!cfg.no_emb_d) check_matrix(&ModelParams::D, g.dD, report.err_d);
  }

  report.max_rel_error =
      std::max({report.err_a, report.err_b, report.err_c, report.err_d});
  report.passed = report.max_rel_error <= cfg.tolerance;
  return report;
}

}  // namespace vsum

#include "vsum/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "vsum/dataset_io.hpp"
#include "vsum/error.hpp"
#include "vsum/rng.hpp"

namespace vsum {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kExactSegmentLimit = 12;

void check_finite(const Matrix& m, const char* name) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i]))
      fail(std::string("validation error: non-finite entry in ") + name);
}

Matrix submatrix(const Matrix& m, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

// m^T x without materializing the transpose
Vec tmat_vec(const Matrix& m, const Vec& x) {
  Vec out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[j] += m(i, j) * x[i];
  return out;
}

}  // namespace

ModelParams init_params(const ModelDims& dims, double lambda, double init_scale,
                        std::uint64_t seed, bool no_attention, bool no_emb_d) {
  ModelParams p;
  p.dims = dims;
  p.lambda = lambda;
  p.no_attention = no_attention;
  p.no_emb_d = no_emb_d;
  p.seed = seed;

  Rng rng(derive_seed(seed, "init"));
  auto fill = [&](Matrix& m, int rows, int cols) {
    m = Matrix(rows, cols);
    const double s = init_scale / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  };
  fill(p.A, dims.h, dims.d_f);
  fill(p.B, dims.h_o, dims.d_f);
  fill(p.C, dims.h, dims.d_q);
  if (no_emb_d) {
    if (dims.h_L != p.encoding_dim())
      fail("validation error: no_emb_d requires h_L = " + std::to_string(p.encoding_dim()));
    p.D = Matrix::identity(dims.h_L);
  } else {
    fill(p.D, dims.h_L, p.encoding_dim());
  }
  check_params(p);
  return p;
}

void check_params(const ModelParams& p) {
  const ModelDims& d = p.dims;
  if (d.d_f < 1 || d.d_q < 1 || d.K < 1 || d.h < 1 || d.h_o < 1 || d.h_L < 1)
    fail("validation error: model dimensions must all be >= 1");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
    fail("validation error: lambda must be finite and >= 0");
  auto shape = [](const Matrix& m, int rows, int cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      fail(std::string("validation error: matrix ") + name + " must be " +
           std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  };
  shape(p.A, d.h, d.d_f, "A");
  shape(p.B, d.h_o, d.d_f, "B");
  shape(p.C, d.h, d.d_q, "C");
  shape(p.D, d.h_L, p.encoding_dim(), "D");
  check_finite(p.A, "A");
  check_finite(p.B, "B");
  check_finite(p.C, "C");
  check_finite(p.D, "D");
  if (p.no_emb_d && p.D != Matrix::identity(d.h_L))
    fail("validation error: no_emb_d requires D = identity");
}

ShotEncoding encode_shot(const ModelParams& p, const std::vector<Vec>& frames,
                         const Vec& q_vec) {
  if (frames.empty()) fail("validation error: encode_shot requires at least one frame");
  if (static_cast<int>(q_vec.size()) != p.dims.d_q)
    fail("validation error: query vector has dimension " + std::to_string(q_vec.size()) +
         ", expected " + std::to_string(p.dims.d_q));
  for (const Vec& f : frames) {
    if (static_cast<int>(f.size()) != p.dims.d_f)
      fail("validation error: frame has dimension " + std::to_string(f.size()) +
           ", expected " + std::to_string(p.dims.d_f));
    for (double x : f)
      if (!std::isfinite(x)) fail("validation error: non-finite frame feature");
  }
  for (double x : q_vec)
    if (!std::isfinite(x)) fail("validation error: non-finite query vector entry");

  const int K = static_cast<int>(frames.size());
  const Vec u = mat_vec(p.C, q_vec);
  ShotEncoding e;
  e.attention.assign(K, 0.0);

  if (p.no_attention) {
    Vec cbar(p.dims.h_o, 0.0);
    for (int k = 0; k < K; ++k) {
      e.attention[k] = 1.0 / static_cast<double>(K);
      const Vec c = mat_vec(p.B, frames[k]);
      for (int d = 0; d < p.dims.h_o; ++d) cbar[d] += c[d];
    }
    for (double& x : cbar) x /= static_cast<double>(K);
    e.o = cbar;
    e.o.insert(e.o.end(), u.begin(), u.end());
    return e;
  }

  Vec logits(K);
  for (int k = 0; k < K; ++k) logits[k] = dot(u, mat_vec(p.A, frames[k]));
  const double top = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (int k = 0; k < K; ++k) {
    e.attention[k] = std::exp(logits[k] - top);
    norm += e.attention[k];
  }
  for (double& a : e.attention) a /= norm;

  e.o.assign(p.dims.h_o, 0.0);
  for (int k = 0; k < K; ++k) {
    const Vec c = mat_vec(p.B, frames[k]);
    for (int d = 0; d < p.dims.h_o; ++d) e.o[d] += e.attention[k] * c[d];
  }
  return e;
}

Vec query_vector(const ModelParams& p, const Query& q) {
  return indicator_vector(q, p.dims.d_q);
}

std::vector<ShotEncoding> encode_video(const ModelParams& p, const Video& v,
                                       const Query& q) {
  if (!v.has_frames())
    fail("validation error: video \"" + v.id + "\" has no frame features");
  if (!q.video_id.empty() && q.video_id != v.id)
    fail("validation error: query \"" + q.id + "\" refers to video \"" + q.video_id +
         "\", not \"" + v.id + "\"");
  const Vec q_vec = query_vector(p, q);
  std::vector<ShotEncoding> encs;
  encs.reserve(v.shots.size());
  for (const Shot& s : v.shots) encs.push_back(encode_shot(p, s.frames, q_vec));
  return encs;
}

int Kernel::position_of(int shot) const {
  for (std::size_t i = 0; i < ground_set.size(); ++i)
    if (ground_set[i] == shot) return static_cast<int>(i);
  return -1;
}

Kernel build_kernel(const ModelParams& p, const std::vector<ShotEncoding>& encodings,
                    std::vector<int> ground_set) {
  if (encodings.empty()) fail("validation error: build_kernel requires encodings");
  const int n = static_cast<int>(encodings.size());
  if (ground_set.empty()) {
    ground_set.resize(n);
    for (int i = 0; i < n; ++i) ground_set[i] = i;
  }
  if (static_cast<int>(ground_set.size()) != n)
    fail("validation error: ground set size does not match encoding count");
  const int enc = p.encoding_dim();
  for (const ShotEncoding& e : encodings)
    if (static_cast<int>(e.o.size()) != enc)
      fail("validation error: encoding has dimension " + std::to_string(e.o.size()) +
           ", expected " + std::to_string(enc));

  // columns of Z are the kernel embeddings D o_i
  Matrix Z(p.dims.h_L, n);
  for (int j = 0; j < n; ++j) {
    const Vec z = mat_vec(p.D, encodings[j].o);
    for (int d = 0; d < p.dims.h_L; ++d) Z(d, j) = z[d];
  }
  Kernel k;
  k.ground_set = std::move(ground_set);
  k.L = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int d = 0; d < p.dims.h_L; ++d) s += Z(d, i) * Z(d, j);
      k.L(i, j) = s;
      k.L(j, i) = s;
    }
    k.L(i, i) += p.lambda;
  }
  return k;
}

namespace {

std::vector<int> kernel_positions(const Kernel& k, const std::vector<int>& shots) {
  std::vector<int> pos;
  pos.reserve(shots.size());
  for (int s : shots) {
    const int p = k.position_of(s);
    if (p < 0)
      fail("validation error: shot " + std::to_string(s) + " outside kernel ground set");
    pos.push_back(p);
  }
  return pos;
}

}  // namespace

double cond_log_prob(const Kernel& k, const std::vector<int>& y_t,
                     const std::vector<int>& y_prev) {
  for (int s : y_t)
    if (std::find(y_prev.begin(), y_prev.end(), s) != y_prev.end())
      fail("validation error: shot " + std::to_string(s) +
           " appears in both the selection and the conditioning set");

  std::vector<int> sel_pos = kernel_positions(k, y_t);
  const std::vector<int> prev_pos = kernel_positions(k, y_prev);
  sel_pos.insert(sel_pos.end(), prev_pos.begin(), prev_pos.end());
  std::sort(sel_pos.begin(), sel_pos.end());

  Matrix scratch;
  const LogDet num = logdet_minor(k.L, sel_pos, scratch);
  if (num.sign < 0)
    fail("numerical error: negative principal minor determinant (kernel not PSD)");

  Matrix m = k.L;
  std::vector<char> is_prev(m.rows(), 0);
  for (int p : prev_pos) is_prev[p] = 1;
  for (int i = 0; i < m.rows(); ++i)
    if (!is_prev[i]) m(i, i) += 1.0;
  const LogDet den = logdet(m);
  if (den.sign <= 0) fail("numerical error: nonpositive normalizer determinant");

  if (num.sign == 0) return kNegInf;
  return num.value - den.value;
}

double cond_prob(const Kernel& k, const std::vector<int>& y_t,
                 const std::vector<int>& y_prev) {
  const double lp = cond_log_prob(k, y_t, y_prev);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

namespace {

Kernel segment_kernel(const ModelParams& p, const std::vector<ShotEncoding>& encs,
                      const std::vector<int>& ground) {
  std::vector<ShotEncoding> sub;
  sub.reserve(ground.size());
  for (int s : ground) sub.push_back(encs[s]);
  return build_kernel(p, sub, ground);
}

std::vector<int> make_ground(const std::vector<int>& y_prev, const ShotRange& seg) {
  std::vector<int> ground = y_prev;
  for (int i = seg.begin; i < seg.end; ++i) ground.push_back(i);
  std::sort(ground.begin(), ground.end());
  return ground;
}

void check_inputs(const ModelParams& p, const Video& v, const Summary& s) {
  check_params(p);
  if (s.video_id != v.id)
    fail("validation error: summary refers to video \"" + s.video_id + "\", not \"" +
         v.id + "\"");
  for (int shot : s.shots)
    if (shot < 0 || shot >= v.shot_count())
      fail("validation error: summary shot " + std::to_string(shot) +
           " out of range for video \"" + v.id + "\"");
}

std::vector<int> segment_selection(const Summary& s, const ShotRange& seg) {
  std::vector<int> y;
  for (int shot : s.shots)
    if (shot >= seg.begin && shot < seg.end) y.push_back(shot);
  return y;
}

}  // namespace

double seq_log_likelihood(const ModelParams& p, const Video& v, const Query& q,
                          const Summary& s) {
  check_inputs(p, v, s);
  const std::vector<ShotEncoding> encs = encode_video(p, v, q);

  double ll = 0.0;
  std::vector<int> y_prev;
  int t = 0;
  for (const ShotRange& seg : segments(v)) {
    ++t;
    const std::vector<int> ground = make_ground(y_prev, seg);
    const Kernel k = segment_kernel(p, encs, ground);
    const std::vector<int> y_t = segment_selection(s, seg);
    const double lp = cond_log_prob(k, y_t, y_prev);
    if (lp == kNegInf)
      fail("numerical error: summary has zero probability in segment " +
           std::to_string(t) + " (rank-deficient kernel; use lambda > 0)");
    ll += lp;
    y_prev = y_t;
  }
  return ll;
}

Gradients grad_log_likelihood(const ModelParams& p, const Video& v, const Query& q,
                              const Summary& s) {
  check_inputs(p, v, s);
  const Vec q_vec = query_vector(p, q);
  const std::vector<ShotEncoding> encs = encode_video(p, v, q);
  const int enc = p.encoding_dim();
  const int n_shots = v.shot_count();

  Gradients g;
  g.dA = Matrix(p.A.rows(), p.A.cols());
  g.dB = Matrix(p.B.rows(), p.B.cols());
  g.dC = Matrix(p.C.rows(), p.C.cols());
  g.dD = Matrix(p.D.rows(), p.D.cols());

  // d log-likelihood / d o_i, summed over every factor the shot enters
  std::vector<Vec> d_o(n_shots, Vec(enc, 0.0));

  std::vector<int> y_prev;
  int t = 0;
  for (const ShotRange& seg : segments(v)) {
    ++t;
    const std::vector<int> ground = make_ground(y_prev, seg);
    const int n = static_cast<int>(ground.size());

    Matrix O(enc, n);
    for (int j = 0; j < n; ++j)
      for (int d = 0; d < enc; ++d) O(d, j) = encs[ground[j]].o[d];
    const Matrix Z = matmul(p.D, O);

    Matrix L(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double sum = 0.0;
        for (int d = 0; d < Z.rows(); ++d) sum += Z(d, i) * Z(d, j);
        L(i, j) = sum;
        L(j, i) = sum;
      }
      L(i, i) += p.lambda;
    }

    const std::vector<int> y_t = segment_selection(s, seg);
    std::vector<int> sel_pos;
    std::vector<char> is_prev(n, 0);
    for (int shot : y_t)
      sel_pos.push_back(static_cast<int>(
          std::lower_bound(ground.begin(), ground.end(), shot) - ground.begin()));
    for (int shot : y_prev) {
      const int pos = static_cast<int>(
          std::lower_bound(ground.begin(), ground.end(), shot) - ground.begin());
      sel_pos.push_back(pos);
      is_prev[pos] = 1;
    }
    std::sort(sel_pos.begin(), sel_pos.end());

    const Matrix ls = submatrix(L, sel_pos);
    const LogDet ld_num = logdet(ls);
    if (ld_num.sign <= 0)
      fail("numerical error: summary has zero probability in segment " +
           std::to_string(t) + " (rank-deficient kernel; use lambda > 0)");
    Matrix m = L;
    for (int i = 0; i < n; ++i)
      if (!is_prev[i]) m(i, i) += 1.0;
    const LogDet ld_den = logdet(m);
    if (ld_den.sign <= 0) fail("numerical error: nonpositive normalizer determinant");
    g.log_likelihood += ld_num.value - ld_den.value;

    // dL = scatter(inv(L_S)) - inv(L + I_t), both parts symmetric
    const Matrix inv_ls = inverse(ls);
    const Matrix inv_m = inverse(m);
    Matrix d_l(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d_l(i, j) = -inv_m(i, j);
    for (std::size_t a = 0; a < sel_pos.size(); ++a)
      for (std::size_t b = 0; b < sel_pos.size(); ++b)
        d_l(sel_pos[a], sel_pos[b]) += inv_ls(static_cast<int>(a), static_cast<int>(b));

    // L = Z^T Z + lambda I  =>  dZ = 2 Z dL
    Matrix d_z = matmul(Z, d_l);
    for (std::size_t i = 0; i < d_z.size(); ++i) d_z.data()[i] *= 2.0;

    axpy(g.dD, matmul(d_z, transpose(O)), 1.0);
    const Matrix d_og = matmul(transpose(p.D), d_z);
    for (int j = 0; j < n; ++j)
      for (int d = 0; d < enc; ++d) d_o[ground[j]][d] += d_og(d, j);

    y_prev = y_t;
  }

  // Back through the per-shot encodings. u = C q_vec is shared by all
  // shots, so its gradient accumulates before reaching C.
  const Vec u = mat_vec(p.C, q_vec);
  Vec du(p.dims.h, 0.0);
  const int d_f = p.dims.d_f;
  for (int i = 0; i < n_shots; ++i) {
    const auto& frames = v.shots[i].frames;
    const int K = static_cast<int>(frames.size());
    const Vec& go = d_o[i];

    if (p.no_attention) {
      // o = [mean_k B f_k ; u]
      Vec fbar(d_f, 0.0);
      for (const Vec& f : frames)
        for (int d = 0; d < d_f; ++d) fbar[d] += f[d];
      for (double& x : fbar) x /= static_cast<double>(K);
      const Vec go_c(go.begin(), go.begin() + p.dims.h_o);
      add_outer(g.dB, go_c, fbar);
      for (int d = 0; d < p.dims.h; ++d) du[d] += go[p.dims.h_o + d];
      continue;
    }

    const Vec& att = encs[i].attention;
    // dB via o = B (sum_k att_k f_k)
    Vec fw(d_f, 0.0);
    for (int k = 0; k < K; ++k)
      for (int d = 0; d < d_f; ++d) fw[d] += att[k] * frames[k][d];
    add_outer(g.dB, go, fw);

    // softmax backward: datt_k = go . (B f_k), dlogit_k = att_k (datt_k - s)
    const Vec gb = tmat_vec(p.B, go);
    Vec datt(K);
    double s_dot = 0.0;
    for (int k = 0; k < K; ++k) {
      datt[k] = dot(gb, frames[k]);
      s_dot += att[k] * datt[k];
    }
    Vec fl(d_f, 0.0);
    for (int k = 0; k < K; ++k) {
      const double dl = att[k] * (datt[k] - s_dot);
      for (int d = 0; d < d_f; ++d) fl[d] += dl * frames[k][d];
    }
    // logit_k = u . (A f_k): du += A fl, dA += u fl^T
    const Vec afl = mat_vec(p.A, fl);
    for (int d = 0; d < p.dims.h; ++d) du[d] += afl[d];
    add_outer(g.dA, u, fl);
  }
  add_outer(g.dC, du, q_vec);
  return g;
}

std::vector<int> Selection::flattened() const {
  std::vector<int> out;
  for (const auto& seg : per_segment) out.insert(out.end(), seg.begin(), seg.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// -inf when the minor is singular (or numerically negative)
double minor_score(const Matrix& l, const std::vector<int>& pos, Matrix& scratch) {
  const LogDet ld = logdet_minor(l, pos, scratch);
  return ld.sign > 0 ? ld.value : kNegInf;
}

bool subset_better(double score, const std::vector<int>& shots, double best_score,
                   const std::vector<int>& best_shots) {
  if (score != best_score) return score > best_score;
  if (shots.size() != best_shots.size()) return shots.size() < best_shots.size();
  return shots < best_shots;
}

}  // namespace

Selection summarize(const ModelParams& p, const Video& v, const Query& q) {
  check_params(p);
  const std::vector<ShotEncoding> encs = encode_video(p, v, q);

  Selection sel;
  std::vector<int> y_prev;
  Matrix scratch;
  for (const ShotRange& seg : segments(v)) {
    const std::vector<int> ground = make_ground(y_prev, seg);
    const Kernel k = segment_kernel(p, encs, ground);
    auto pos_of = [&](int shot) {
      return static_cast<int>(std::lower_bound(ground.begin(), ground.end(), shot) -
                              ground.begin());
    };
    std::vector<int> prev_pos;
    for (int shot : y_prev) prev_pos.push_back(pos_of(shot));
    std::sort(prev_pos.begin(), prev_pos.end());

    auto score_with = [&](const std::vector<int>& shots) {
      std::vector<int> pos = prev_pos;
      for (int shot : shots) pos.push_back(pos_of(shot));
      std::sort(pos.begin(), pos.end());
      return minor_score(k.L, pos, scratch);
    };

    std::vector<int> best_shots;
    double best_score = score_with(best_shots);
    const int m = seg.length();

    if (m <= kExactSegmentLimit) {
      std::vector<int> shots;
      for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        shots.clear();
        for (int b = 0; b < m; ++b)
          if (mask & (1u << b)) shots.push_back(seg.begin + b);
        const double score = score_with(shots);
        if (subset_better(score, shots, best_score, best_shots)) {
          best_score = score;
          best_shots = shots;
        }
      }
    } else {
      // add the shot that most increases the determinant, while any does
      for (;;) {
        int best_c = -1;
        double best_c_score = best_score;
        for (int c = seg.begin; c < seg.end; ++c) {
          if (std::binary_search(best_shots.begin(), best_shots.end(), c)) continue;
          std::vector<int> trial = best_shots;
          trial.insert(std::upper_bound(trial.begin(), trial.end(), c), c);
          const double score = score_with(trial);
          if (score > best_c_score) {
            best_c_score = score;
            best_c = c;
          }
        }
        if (best_c < 0) break;
        best_shots.insert(std::upper_bound(best_shots.begin(), best_shots.end(), best_c),
                          best_c);
        best_score = best_c_score;
      }
    }

    sel.per_segment.push_back(best_shots);
    y_prev = best_shots;
  }
  return sel;
}

std::string checkpoint_to_json(const ModelParams& p) {
  check_params(p);
  using ojson = nlohmann::ordered_json;
  auto flat = [](const Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  ojson j;
  j["dims"] = {{"d_f", p.dims.d_f}, {"d_q", p.dims.d_q}, {"K", p.dims.K},
               {"h", p.dims.h},     {"h_o", p.dims.h_o}, {"h_L", p.dims.h_L}};
  j["lambda"] = p.lambda;
  j["A"] = flat(p.A);
  j["B"] = flat(p.B);
  j["C"] = flat(p.C);
  j["D"] = flat(p.D);
  j["seed"] = p.seed;
  if (p.no_attention || p.no_emb_d)
    j["ablation"] = {{"no_attention", p.no_attention}, {"no_emb_d", p.no_emb_d}};
  return j.dump(2) + "\n";
}

ModelParams checkpoint_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: checkpoint: ") + e.what());
  }
  ModelParams p;
  try {
    const auto& dims = j.at("dims");
    p.dims.d_f = dims.at("d_f").get<int>();
    p.dims.d_q = dims.at("d_q").get<int>();
    p.dims.K = dims.at("K").get<int>();
    p.dims.h = dims.at("h").get<int>();
    p.dims.h_o = dims.at("h_o").get<int>();
    p.dims.h_L = dims.at("h_L").get<int>();
    p.lambda = j.at("lambda").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("ablation")) {
      p.no_attention = j["ablation"].value("no_attention", false);
      p.no_emb_d = j["ablation"].value("no_emb_d", false);
    }
    auto unflat = [](const std::vector<double>& v, int rows, int cols, const char* name) {
      if (static_cast<int>(v.size()) != rows * cols)
        fail(std::string("parse error: checkpoint: matrix ") + name + " has " +
             std::to_string(v.size()) + " entries, expected " + std::to_string(rows * cols));
      Matrix m(rows, cols);
      std::copy(v.begin(), v.end(), m.data());
      return m;
    };
    p.A = unflat(j.at("A").get<std::vector<double>>(), p.dims.h, p.dims.d_f, "A");
    p.B = unflat(j.at("B").get<std::vector<double>>(), p.dims.h_o, p.dims.d_f, "B");
    p.C = unflat(j.at("C").get<std::vector<double>>(), p.dims.h, p.dims.d_q, "C");
    p.D = unflat(j.at("D").get<std::vector<double>>(), p.dims.h_L, p.encoding_dim(), "D");
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("parse error: checkpoint: ") + e.what());
  }
  check_params(p);
  return p;
}

void save_checkpoint(const ModelParams& p, const std::string& path) {
  write_text_file(path, checkpoint_to_json(p));
}

ModelParams load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_text_file(path));
}

}  // namespace vsum

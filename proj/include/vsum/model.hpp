// Query-conditioned summarization model. Frames of a shot are attended by
// the query through a memory network, the attended shot encodings
// parameterize a Gram DPP kernel, and summaries are scored segment by
// segment with a conditional DPP. Exposes the likelihood, its exact
// gradients, and per-segment MAP inference.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsum/linalg.hpp"
#include "vsum/types.hpp"

namespace vsum {

struct ModelDims {
  int d_f = 0;  // frame feature dimension
  int d_q = 0;  // query indicator dimension (dictionary size)
  int K = 0;    // frames per shot used during training
  int h = 0;    // memory embedding dimension
  int h_o = 0;  // output embedding dimension
  int h_L = 0;  // kernel embedding dimension

  bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
  ModelDims dims;
  Matrix A;  // h x d_f, frame -> memory
  Matrix B;  // h_o x d_f, frame -> output
  Matrix C;  // h x d_q, query embedding
  Matrix D;  // h_L x encoding_dim(), kernel embedding
  double lambda = 1e-6;
  bool no_attention = false;  // uniform attention, query vector appended to o
  bool no_emb_d = false;      // D fixed to identity, kernel is o_i . o_j
  std::uint64_t seed = 0;

  // h_o, or h_o + h when the query vector is appended
  int encoding_dim() const { return no_attention ? dims.h_o + dims.h : dims.h_o; }

  bool operator==(const ModelParams&) const = default;
};

// Entries uniform in [-init_scale, init_scale] / sqrt(fan-in), drawn in a
// fixed order from the seed. With no_emb_d, D is the identity and h_L must
// equal the encoding dimension.
ModelParams init_params(const ModelDims& dims, double lambda, double init_scale,
                        std::uint64_t seed, bool no_attention = false, bool no_emb_d = false);

void check_params(const ModelParams& p);

struct ShotEncoding {
  Vec o;          // encoding_dim()
  Vec attention;  // one weight per frame, sums to 1
};

// u = C q_vec, m_k = A f_k, attention = softmax_k(u . m_k) with
// max-subtraction, o = sum_k attention_k B f_k. Under no_attention the
// weights are uniform and o = [mean_k B f_k ; u].
ShotEncoding encode_shot(const ModelParams& p, const std::vector<Vec>& frames,
                         const Vec& q_vec);

// Binary indicator of the query's concepts; validates frames are present.
Vec query_vector(const ModelParams& p, const Query& q);
std::vector<ShotEncoding> encode_video(const ModelParams& p, const Video& v, const Query& q);

struct Kernel {
  Matrix L;                    // symmetric, |ground_set| square
  std::vector<int> ground_set;  // shot index per row/column

  int position_of(int shot) const;
};

// L_ij = (D o_i) . (D o_j) + lambda [i = j]. ground_set defaults to
// 0..n-1; otherwise it names the shot behind each encoding.
Kernel build_kernel(const ModelParams& p, const std::vector<ShotEncoding>& encodings,
                    std::vector<int> ground_set = {});

// det(L restricted to y_t ∪ y_prev) / det(L + I_t) where I_t is the
// identity with zeroed diagonal at y_prev's positions. The empty numerator
// set has determinant 1. cond_log_prob returns -infinity for an exactly
// singular numerator.
double cond_log_prob(const Kernel& k, const std::vector<int>& y_t,
                     const std::vector<int>& y_prev);
double cond_prob(const Kernel& k, const std::vector<int>& y_t,
                 const std::vector<int>& y_prev);

// Sum over segments of the conditional log-probability of the summary's
// shots in that segment, conditioned on the previous segment's selection.
// Fails on a zero-probability selection (possible only with lambda = 0).
double seq_log_likelihood(const ModelParams& p, const Video& v, const Query& q,
                          const Summary& s);

struct Gradients {
  double log_likelihood = 0.0;
  Matrix dA, dB, dC, dD;
};

// Exact reverse-mode gradient of seq_log_likelihood in every parameter
// entry. dD is reported even under no_emb_d; the trainer decides what to
// update. dA is zero under no_attention.
Gradients grad_log_likelihood(const ModelParams& p, const Video& v, const Query& q,
                              const Summary& s);

struct Selection {
  std::vector<std::vector<int>> per_segment;

  std::vector<int> flattened() const;
};

// Per segment, the subset maximizing det(L over y_t ∪ y_prev): exact
// enumeration for segments of up to 12 shots, greedy
// add-while-determinant-increases beyond. Equal determinants prefer the
// smaller subset, then the lexicographically smaller one.
Selection summarize(const ModelParams& p, const Video& v, const Query& q);

// Round-trips bit-exactly: doubles are rendered with shortest-round-trip
// precision.
std::string checkpoint_to_json(const ModelParams& p);
ModelParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace vsum

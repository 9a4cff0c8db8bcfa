#pragma once

#include <span>
#include <string>
#include <vector>

#include "topicpara/dims.hpp"
#include "topicpara/parameter.hpp"
#include "topicpara/rng.hpp"
#include "topicpara/tape.hpp"

namespace topicpara {

enum class Mode { train, eval };

// Detector output for one image: one row per region.
struct RawRegionSet {
  std::string image_id;
  Tensor features;                // [M x D0]
  std::vector<double> objectness;  // M scores in [0, 1]

  std::size_t region_count() const { return objectness.size(); }
};

// Stable sort of rows by descending objectness.
void sort_by_objectness(RawRegionSet& regions);

struct CaeParams {
  Parameter embed_w;   // [D0 x D1]
  Parameter embed_b;   // [D1]
  Parameter bn_gamma;  // [D1]
  Parameter bn_beta;   // [D1]
  Parameter conv_w;    // [K x M x C1]
  Parameter conv_b;    // [K]
  Parameter deconv_w;  // [K x M x C1], independent of conv_w
  Parameter deconv_b;  // [D1]
  Parameter stop_w;    // [D2 x 2]
  Parameter stop_b;    // [2]
  Tensor bn_running_mean;
  Tensor bn_running_var;
  bool batch_norm = true;
  double bn_momentum = 0.9;

  static CaeParams create(const ModelDims& dims, RngStream& rng, bool batch_norm = true);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

inline constexpr double kBatchNormEps = 1e-5;

// CaeParams bound to one tape.
struct CaeVars {
  ModelDims dims;
  Var embed_w, embed_b, bn_gamma, bn_beta, conv_w, conv_b, deconv_w, deconv_b, stop_w, stop_b;
  const Tensor* bn_running_mean = nullptr;
  const Tensor* bn_running_var = nullptr;
  bool batch_norm = true;
};

CaeVars bind(Tape& tape, const ModelDims& dims, CaeParams& params);
CaeVars bind(Tape& tape, const ModelDims& dims, const CaeParams& params);

struct EmbedResult {
  std::vector<Var> maps;  // one [M x D1] region feature map per image
  bool has_batch_stats = false;
  Tensor batch_mean;
  Tensor batch_var;
};

// Linear embedding of every region (rows taken in descending objectness
// order, sorting a copy when needed), then batch normalization: batch
// statistics over all regions of all images in train mode, running
// statistics in eval mode.
EmbedResult embed_regions(const CaeVars& cae, std::span<const RawRegionSet* const> batch, Mode mode);
Var embed_regions(const CaeVars& cae, const RawRegionSet& regions);  // eval mode

// running = momentum * running + (1 - momentum) * batch
void update_running_stats(CaeParams& params, const EmbedResult& embedded);

// Valid strided convolution, one channel in, K filters out:
//   out[k][j] = bias[k] + sum_m sum_c filters[k][m][c] * V[m][j*C2 + c]
// V [M x D1], filters [K x M x C1], bias [K] -> [K x D2].
Var conv_encode(Var region_map, Var filters, Var bias, std::size_t stride);

// Transposed convolution with the same geometry:
//   out[m][j*C2 + c] += filters[k][m][c] * topics[k][j];  out[m][i] += bias[i]
// topics [K x D2], filters [K x M x C1], bias [D1] -> [M x D1].
Var deconv_decode(Var topics, Var filters, Var bias, std::size_t stride);

struct TopicSet {
  Var topics;       // [K x D2]
  Var stop_logits;  // [K x 2], columns CONTINUE, STOP
};

TopicSet encode_topics(const CaeVars& cae, Var region_map);
Var reconstruct(const CaeVars& cae, Var topics);
// sum |reconstruction - original|
Var reconstruction_loss(Var reconstruction, Var original);

inline constexpr std::size_t kContinue = 0;
inline constexpr std::size_t kStop = 1;

// P(STOP) per topic from [K x 2] logits.
std::vector<double> predict_stop(const Tensor& stop_logits);

}  // namespace topicpara

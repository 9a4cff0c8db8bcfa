#include "topicpara/cae.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

#include "topicpara/error.hpp"
#include "topicpara/ops.hpp"

namespace topicpara {

void sort_by_objectness(RawRegionSet& regions) {
  const std::size_t m = regions.objectness.size();
  if (regions.features.rank() != 2 || regions.features.rows() != m) {
    throw ShapeError("region set " + regions.image_id + ": feature rows do not match objectness count");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return regions.objectness[a] > regions.objectness[b]; });
  if (std::is_sorted(order.begin(), order.end())) return;
  Tensor features(regions.features.shape());
  std::vector<double> objectness(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto src = regions.features.row(order[i]);
    std::copy(src.begin(), src.end(), features.row(i).begin());
    objectness[i] = regions.objectness[order[i]];
  }
  regions.features = std::move(features);
  regions.objectness = std::move(objectness);
}

CaeParams CaeParams::create(const ModelDims& dims, RngStream& rng, bool batch_norm) {
  dims.validate_cae();
  const std::size_t d1 = dims.embed_dim;
  const std::size_t d2 = dims.topic_dim();
  const std::size_t k = dims.topics;
  const std::size_t m = dims.regions;
  const std::size_t c1 = dims.filter_width;
  CaeParams p;
  p.embed_w = Parameter("cae.embed.weight", Tensor({dims.raw_dim, d1}));
  p.embed_b = Parameter("cae.embed.bias", Tensor({d1}));
  p.bn_gamma = Parameter("cae.bn.gamma", Tensor({d1}, 1.0));
  p.bn_beta = Parameter("cae.bn.beta", Tensor({d1}));
  p.conv_w = Parameter("cae.conv.weight", Tensor({k, m, c1}));
  p.conv_b = Parameter("cae.conv.bias", Tensor({k}));
  p.deconv_w = Parameter("cae.deconv.weight", Tensor({k, m, c1}));
  p.deconv_b = Parameter("cae.deconv.bias", Tensor({d1}));
  p.stop_w = Parameter("cae.stop.weight", Tensor({d2, 2}));
  p.stop_b = Parameter("cae.stop.bias", Tensor({2}));
  init_uniform(p.embed_w, dims.raw_dim, rng);
  init_uniform(p.embed_b, dims.raw_dim, rng);
  init_uniform(p.conv_w, m * c1, rng);
  init_uniform(p.conv_b, m * c1, rng);
  init_uniform(p.deconv_w, k * c1, rng);
  init_uniform(p.deconv_b, k * c1, rng);
  init_uniform(p.stop_w, d2, rng);
  init_uniform(p.stop_b, d2, rng);
  p.bn_running_mean = Tensor({d1});
  p.bn_running_var = Tensor({d1}, 1.0);
  p.batch_norm = batch_norm;
  return p;
}

std::vector<Parameter*> CaeParams::parameters() {
  return {&embed_w, &embed_b, &bn_gamma, &bn_beta, &conv_w, &conv_b, &deconv_w, &deconv_b, &stop_w, &stop_b};
}

std::vector<const Parameter*> CaeParams::parameters() const {
  return {&embed_w, &embed_b, &bn_gamma, &bn_beta, &conv_w, &conv_b, &deconv_w, &deconv_b, &stop_w, &stop_b};
}

namespace {

template <class P>
CaeVars bind_impl(Tape& tape, const ModelDims& dims, P& p) {
  CaeVars v;
  v.dims = dims;
  v.embed_w = tape.param(p.embed_w);
  v.embed_b = tape.param(p.embed_b);
  v.batch_norm = p.batch_norm;
  if (p.batch_norm) {
    v.bn_gamma = tape.param(p.bn_gamma);
    v.bn_beta = tape.param(p.bn_beta);
  }
  v.conv_w = tape.param(p.conv_w);
  v.conv_b = tape.param(p.conv_b);
  v.deconv_w = tape.param(p.deconv_w);
  v.deconv_b = tape.param(p.deconv_b);
  v.stop_w = tape.param(p.stop_w);
  v.stop_b = tape.param(p.stop_b);
  v.bn_running_mean = &p.bn_running_mean;
  v.bn_running_var = &p.bn_running_var;
  return v;
}

}  // namespace

CaeVars bind(Tape& tape, const ModelDims& dims, CaeParams& params) { return bind_impl(tape, dims, params); }
CaeVars bind(Tape& tape, const ModelDims& dims, const CaeParams& params) { return bind_impl(tape, dims, params); }

EmbedResult embed_regions(const CaeVars& cae, std::span<const RawRegionSet* const> batch, Mode mode) {
  if (batch.empty()) throw Error("embed_regions: empty batch");
  const std::size_t m = cae.dims.regions;
  const std::size_t d0 = cae.dims.raw_dim;
  Tensor stacked({batch.size() * m, d0});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::optional<RawRegionSet> sorted;
    const auto& obj = batch[b]->objectness;
    if (!std::is_sorted(obj.begin(), obj.end(), std::greater<>())) {
      sorted = *batch[b];
      sort_by_objectness(*sorted);
    }
    const RawRegionSet& r = sorted ? *sorted : *batch[b];
    if (r.features.rank() != 2 || r.features.cols() != d0) {
      throw ShapeError("embed_regions: image " + r.image_id + " has feature width " +
                       (r.features.rank() == 2 ? std::to_string(r.features.cols()) : to_string(r.features.shape())) +
                       ", expected " + std::to_string(d0));
    }
    if (r.features.rows() != m) {
      throw ShapeError("embed_regions: image " + r.image_id + " has " + std::to_string(r.features.rows()) +
                       " regions, expected " + std::to_string(m));
    }
    std::copy(r.features.values().begin(), r.features.values().end(), stacked.values().begin() + b * m * d0);
  }
  Tape& tape = *cae.embed_w.tape();
  Var projected = add_row(matmul(tape.constant(std::move(stacked)), cae.embed_w), cae.embed_b);
  EmbedResult result;
  Var normalized = projected;
  if (cae.batch_norm) {
    if (mode == Mode::train) {
      BatchNormResult bn = batch_norm(projected, cae.bn_gamma, cae.bn_beta, kBatchNormEps);
      normalized = bn.output;
      result.has_batch_stats = true;
      result.batch_mean = std::move(bn.batch_mean);
      result.batch_var = std::move(bn.batch_var);
    } else {
      normalized = batch_norm_inference(projected, *cae.bn_running_mean, *cae.bn_running_var, cae.bn_gamma,
                                        cae.bn_beta, kBatchNormEps);
    }
  }
  if (batch.size() == 1) {
    result.maps.push_back(normalized);
  } else {
    for (std::size_t b = 0; b < batch.size(); ++b) result.maps.push_back(rows(normalized, b * m, m));
  }
  return result;
}

Var embed_regions(const CaeVars& cae, const RawRegionSet& regions) {
  const RawRegionSet* one[] = {&regions};
  return embed_regions(cae, one, Mode::eval).maps.front();
}

void update_running_stats(CaeParams& params, const EmbedResult& embedded) {
  if (!embedded.has_batch_stats) return;
  const double mom = params.bn_momentum;
  for (std::size_t j = 0; j < params.bn_running_mean.size(); ++j) {
    params.bn_running_mean[j] = mom * params.bn_running_mean[j] + (1.0 - mom) * embedded.batch_mean[j];
    params.bn_running_var[j] = mom * params.bn_running_var[j] + (1.0 - mom) * embedded.batch_var[j];
  }
}

namespace {

struct ConvGeometry {
  std::size_t k, m, c1, stride, d1, d2;
};

ConvGeometry conv_geometry(const Tensor& filters, std::size_t d1, std::size_t stride) {
  if (filters.rank() != 3) throw ShapeError("conv filters must be [K x M x C1], got " + to_string(filters.shape()));
  ConvGeometry g{filters.dim(0), filters.dim(1), filters.dim(2), stride, d1, 0};
  if (stride == 0 || g.c1 > d1 || (d1 - g.c1) % stride != 0) {
    throw ShapeError("conv geometry: (D1 - C1) must be a non-negative multiple of the stride (D1=" +
                     std::to_string(d1) + ", C1=" + std::to_string(g.c1) + ", C2=" + std::to_string(stride) + ")");
  }
  g.d2 = (d1 - g.c1) / stride + 1;
  return g;
}

}  // namespace

Var conv_encode(Var region_map, Var filters, Var bias, std::size_t stride) {
  const Tensor& v = region_map.value();
  const Tensor& f = filters.value();
  if (v.rank() != 2) throw ShapeError("conv_encode: region map must be [M x D1]");
  const ConvGeometry g = conv_geometry(f, v.cols(), stride);
  if (v.rows() != g.m) {
    throw ShapeError("conv_encode: filter height " + std::to_string(g.m) + " does not match region count " +
                     std::to_string(v.rows()));
  }
  if (bias.value().shape() != Shape{g.k}) throw ShapeError("conv_encode: bias must be [K]");
  Tensor out({g.k, g.d2});
  const Tensor& b = bias.value();
  for (std::size_t k = 0; k < g.k; ++k) {
    for (std::size_t j = 0; j < g.d2; ++j) {
      double s = b[k];
      for (std::size_t m = 0; m < g.m; ++m) {
        const double* vrow = &v.values()[m * g.d1 + j * g.stride];
        const double* frow = &f.values()[(k * g.m + m) * g.c1];
        for (std::size_t c = 0; c < g.c1; ++c) s += frow[c] * vrow[c];
      }
      out.at(k, j) = s;
    }
  }
  return region_map.tape()->record(
      "conv_encode", std::move(out), {region_map, filters, bias}, [region_map, filters, bias, g](Tape& t, const Tensor& grad) {
        const Tensor& v = region_map.value();
        const Tensor& f = filters.value();
        const bool need_v = t.requires_grad(region_map);
        const bool need_f = t.requires_grad(filters);
        std::span<double> gv = need_v ? t.grad(region_map) : std::span<double>{};
        std::span<double> gf = need_f ? t.grad(filters) : std::span<double>{};
        if (t.requires_grad(bias)) {
          auto gb = t.grad(bias);
          for (std::size_t k = 0; k < g.k; ++k) {
            for (std::size_t j = 0; j < g.d2; ++j) gb[k] += grad.at(k, j);
          }
        }
        for (std::size_t k = 0; k < g.k; ++k) {
          for (std::size_t j = 0; j < g.d2; ++j) {
            const double up = grad.at(k, j);
            if (up == 0.0) continue;
            for (std::size_t m = 0; m < g.m; ++m) {
              const std::size_t voff = m * g.d1 + j * g.stride;
              const std::size_t foff = (k * g.m + m) * g.c1;
              for (std::size_t c = 0; c < g.c1; ++c) {
                if (need_f) gf[foff + c] += up * v[voff + c];
                if (need_v) gv[voff + c] += up * f[foff + c];
              }
            }
          }
        }
      });
}

Var deconv_decode(Var topics, Var filters, Var bias, std::size_t stride) {
  const Tensor& tv = topics.value();
  const Tensor& f = filters.value();
  const Tensor& b = bias.value();
  if (tv.rank() != 2) throw ShapeError("deconv_decode: topics must be [K x D2]");
  if (b.rank() != 1) throw ShapeError("deconv_decode: bias must be [D1]");
  const ConvGeometry g = conv_geometry(f, b.size(), stride);
  if (tv.rows() != g.k || tv.cols() != g.d2) {
    throw ShapeError("deconv_decode: topics " + to_string(tv.shape()) + " do not match filter geometry [" +
                     std::to_string(g.k) + "x" + std::to_string(g.d2) + "]");
  }
  Tensor out({g.m, g.d1});
  for (std::size_t m = 0; m < g.m; ++m) {
    for (std::size_t i = 0; i < g.d1; ++i) out.at(m, i) = b[i];
  }
  for (std::size_t k = 0; k < g.k; ++k) {
    for (std::size_t j = 0; j < g.d2; ++j) {
      const double tkj = tv.at(k, j);
      if (tkj == 0.0) continue;
      for (std::size_t m = 0; m < g.m; ++m) {
        double* orow = &out.values()[m * g.d1 + j * g.stride];
        const double* frow = &f.values()[(k * g.m + m) * g.c1];
        for (std::size_t c = 0; c < g.c1; ++c) orow[c] += frow[c] * tkj;
      }
    }
  }
  return topics.tape()->record(
      "deconv_decode", std::move(out), {topics, filters, bias}, [topics, filters, bias, g](Tape& t, const Tensor& grad) {
        const Tensor& tv = topics.value();
        const Tensor& f = filters.value();
        if (t.requires_grad(bias)) {
          auto gb = t.grad(bias);
          for (std::size_t m = 0; m < g.m; ++m) {
            for (std::size_t i = 0; i < g.d1; ++i) gb[i] += grad.at(m, i);
          }
        }
        const bool need_t = t.requires_grad(topics);
        const bool need_f = t.requires_grad(filters);
        if (!need_t && !need_f) return;
        std::span<double> gt = need_t ? t.grad(topics) : std::span<double>{};
        std::span<double> gf = need_f ? t.grad(filters) : std::span<double>{};
        for (std::size_t k = 0; k < g.k; ++k) {
          for (std::size_t j = 0; j < g.d2; ++j) {
            double acc = 0.0;
            for (std::size_t m = 0; m < g.m; ++m) {
              const std::size_t goff = m * g.d1 + j * g.stride;
              const std::size_t foff = (k * g.m + m) * g.c1;
              for (std::size_t c = 0; c < g.c1; ++c) {
                acc += grad[goff + c] * f[foff + c];
                if (need_f) gf[foff + c] += grad[goff + c] * tv.at(k, j);
              }
            }
            if (need_t) gt[k * g.d2 + j] += acc;
          }
        }
      });
}

TopicSet encode_topics(const CaeVars& cae, Var region_map) {
  const Shape expected{cae.dims.regions, cae.dims.embed_dim};
  if (region_map.shape() != expected) {
    throw ShapeError("encode_topics: region map " + to_string(region_map.shape()) + ", expected " + to_string(expected));
  }
  Var topics = conv_encode(region_map, cae.conv_w, cae.conv_b, cae.dims.stride);
  Var stop_logits = add_row(matmul(topics, cae.stop_w), cae.stop_b);
  return {topics, stop_logits};
}

Var reconstruct(const CaeVars& cae, Var topics) { return deconv_decode(topics, cae.deconv_w, cae.deconv_b, cae.dims.stride); }

Var reconstruction_loss(Var reconstruction, Var original) { return l1_distance(reconstruction, original); }

std::vector<double> predict_stop(const Tensor& stop_logits) {
  if (stop_logits.rank() != 2 || stop_logits.cols() != 2) throw ShapeError("predict_stop: logits must be [K x 2]");
  std::vector<double> probs(stop_logits.rows());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    // softmax over (continue, stop) reduces to a logistic of the difference
    const double diff = stop_logits.at(k, kStop) - stop_logits.at(k, kContinue);
    probs[k] = diff >= 0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));
  }
  return probs;
}

}  // namespace topicpara

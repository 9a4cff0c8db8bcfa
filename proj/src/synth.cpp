#include "topicpara/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "topicpara/error.hpp"

namespace topicpara {

namespace {

// {c} = color, {n} = noun; two phrasings per sentence position, picked by the object
const std::vector<std::array<std::string, 2>>& templates() {
  static const std::vector<std::array<std::string, 2>> t = {
      {"a {c} {n} is in the picture", "the photo shows a {c} {n}"},
      {"there is also a {c} {n} next to it", "beside it we notice a {c} {n}"},
      {"behind them stands a {c} {n}", "further back waits a {c} {n}"},
      {"we can see one {c} {n} nearby", "close by lies a {c} {n}"},
      {"on the left side sits a {c} {n}", "to the right appears a {c} {n}"},
      {"finally a small {c} {n} rests here", "at last a {c} {n} completes the scene"},
  };
  return t;
}

std::string fill(const std::string& pattern, const std::string& color, const std::string& noun) {
  std::string out = pattern;
  out.replace(out.find("{c}"), 3, color);
  out.replace(out.find("{n}"), 3, noun);
  return out;
}

std::vector<double> gaussian(RngStream& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%05zu", i);
  return buf;
}

}  // namespace

const std::vector<std::string>& synth_nouns() {
  static const std::vector<std::string> n = {
      "dog",  "cat",   "car",   "tree",  "man",   "woman", "bus",    "bird",  "horse",  "table",
      "chair", "boat", "kite",  "clock", "train", "bench", "cow",    "sheep", "bottle", "cup",
      "lamp", "truck", "bike",  "sign",  "fence", "bear",  "pizza",  "vase",  "couch",  "plate"};
  return n;
}

const std::vector<std::string>& synth_colors() {
  static const std::vector<std::string> c = {"red", "blue", "green", "white", "black", "yellow", "brown", "gray", "orange", "pink"};
  return c;
}

SynthDataset synthesize_dataset(RngStream& rng, const SynthOptions& o) {
  const auto& nouns = synth_nouns();
  const auto& colors = synth_colors();
  if (o.images == 0) throw Error("synthesize_dataset: need at least one image");
  if (o.min_objects == 0 || o.min_objects > o.max_objects) throw Error("synthesize_dataset: bad object range");
  if (o.max_objects > templates().size() || o.max_objects > nouns.size()) {
    throw Error("synthesize_dataset: at most " + std::to_string(templates().size()) + " objects per image");
  }
  if (o.regions_per_object == 0 || o.max_objects * o.regions_per_object > o.regions) {
    throw Error("synthesize_dataset: objects need more regions than M provides");
  }
  if (o.raw_dim == 0) throw Error("synthesize_dataset: raw_dim must be positive");
  if (o.noise < 0 || o.val_fraction < 0 || o.test_fraction < 0 || o.val_fraction + o.test_fraction >= 1.0) {
    throw Error("synthesize_dataset: bad noise or split fractions");
  }

  std::vector<std::vector<double>> noun_vecs, color_vecs;
  for (std::size_t i = 0; i < nouns.size(); ++i) noun_vecs.push_back(gaussian(rng, o.raw_dim, 1.0));
  for (std::size_t i = 0; i < colors.size(); ++i) color_vecs.push_back(gaussian(rng, o.raw_dim, 0.5));

  SynthDataset ds;
  ds.object_tokens = nouns;
  for (std::size_t img = 0; img < o.images; ++img) {
    const std::size_t count = o.min_objects + rng.uniform_index(o.max_objects - o.min_objects + 1);
    // distinct nouns: partial Fisher-Yates
    std::vector<std::size_t> pool(nouns.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);

    RawRegionSet r;
    r.image_id = image_name(img);
    r.features = Tensor({o.regions, o.raw_dim});
    r.objectness.assign(o.regions, 0.0);
    std::string text;
    std::size_t row = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t noun = pool[k];
      const std::size_t color = rng.uniform_index(colors.size());
      if (!text.empty()) text += ' ';
      text += fill(templates()[k][(noun + color) % 2], colors[color], nouns[noun]) + '.';
      for (std::size_t j = 0; j < o.regions_per_object; ++j, ++row) {
        auto dst = r.features.row(row);
        for (std::size_t d = 0; d < o.raw_dim; ++d) {
          const double jitter = o.noise > 0 ? o.noise * rng.normal() : 0.0;
          dst[d] = noun_vecs[noun][d] + color_vecs[color][d] + jitter;
        }
        r.objectness[row] = 0.95 - 0.1 * static_cast<double>(k) - 0.01 * static_cast<double>(j);
      }
    }
    for (; row < o.regions; ++row) {
      auto dst = r.features.row(row);
      for (std::size_t d = 0; d < o.raw_dim; ++d) dst[d] = o.noise > 0 ? o.noise * rng.normal() : 0.0;
      r.objectness[row] = 0.3 * rng.uniform();
    }
    sort_by_objectness(r);
    ds.records.push_back({r.image_id, text});
    ds.features.push_back(std::move(r));
  }

  const auto n = o.images;
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * o.test_fraction));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * o.val_fraction));
  const std::size_t n_train = n - n_test - n_val;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = ds.records[i].image_id;
    if (i < n_train) {
      ds.splits.train.push_back(id);
    } else if (i < n_train + n_val) {
      ds.splits.val.push_back(id);
    } else {
      ds.splits.test.push_back(id);
    }
  }
  return ds;
}

}  // namespace topicpara

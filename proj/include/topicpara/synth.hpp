#pragma once

#include <string>
#include <vector>

#include "topicpara/cae.hpp"
#include "topicpara/corpus.hpp"
#include "topicpara/rng.hpp"

namespace topicpara {

// Template-grammar dataset in which every sentence describes one object and
// every object owns a contiguous band of high-objectness regions.
struct SynthOptions {
  std::size_t images = 64;
  std::size_t min_objects = 3;
  std::size_t max_objects = 3;
  std::size_t regions = 50;            // M
  std::size_t raw_dim = 4096;          // D0
  std::size_t regions_per_object = 2;  // remaining rows are background
  double noise = 0.1;                  // std of per-row feature noise
  double val_fraction = 0.125;
  double test_fraction = 0.125;
};

struct SynthDataset {
  std::vector<DatasetRecord> records;
  std::vector<RawRegionSet> features;  // parallel to records
  SplitSpec splits;
  std::vector<std::string> object_tokens;  // nouns, usable as a lexicon file
};

const std::vector<std::string>& synth_nouns();
const std::vector<std::string>& synth_colors();

SynthDataset synthesize_dataset(RngStream& rng, const SynthOptions& options);

}  // namespace topicpara

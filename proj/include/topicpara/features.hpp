#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "topicpara/cae.hpp"

namespace topicpara {

// Region feature files hold one record per image:
//   u32 id length, id bytes, u32 M, u32 D0, M*D0 f64 features, M f64 objectness
// all little-endian. Files ending in .jsonl hold the same fields as JSON
// objects {"image_id", "M", "D0", "features": [[...]], "objectness": [...]}.

using FeatureMap = std::map<std::string, RawRegionSet>;

// Reads every record as stored. Throws FormatError on malformed or duplicate
// records.
std::vector<RawRegionSet> read_feature_records(const std::filesystem::path& path);

// Sorts rows by descending objectness, then keeps the top `regions` rows or
// pads with zero rows of objectness 0.
RawRegionSet normalize_regions(RawRegionSet raw, std::size_t regions);

// read_feature_records + normalize_regions. When `raw_dim` is non-zero every
// record must have that width.
FeatureMap load_features(const std::filesystem::path& path, std::size_t regions, std::size_t raw_dim = 0);

void save_features(const std::filesystem::path& path, const std::vector<RawRegionSet>& records);

}  // namespace topicpara

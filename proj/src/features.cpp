#include "topicpara/features.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "topicpara/error.hpp"

namespace topicpara {

namespace {

constexpr std::size_t kMaxDim = 1u << 24;

bool is_jsonl(const std::filesystem::path& path) { return path.extension() == ".jsonl"; }

void check_record(const RawRegionSet& r, const std::string& where) {
  if (r.image_id.empty()) throw FormatError(where + ": empty image_id");
  if (r.objectness.empty()) throw FormatError(where + ": record '" + r.image_id + "' has no regions");
  if (!r.features.all_finite()) throw FormatError(where + ": record '" + r.image_id + "' has non-finite features");
  for (double s : r.objectness) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw FormatError(where + ": record '" + r.image_id + "' has objectness outside [0, 1]");
    }
  }
}

std::vector<RawRegionSet> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("features: cannot open " + path.string());
  std::vector<RawRegionSet> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::string where = path.string() + " record " + std::to_string(out.size());
    try {
      RawRegionSet r;
      r.image_id = binary::get_string(in, "image id");
      const std::uint32_t m = binary::get_u32(in, "region count");
      const std::uint32_t d0 = binary::get_u32(in, "feature width");
      if (m == 0 || d0 == 0 || m > kMaxDim || d0 > kMaxDim) throw FormatError("implausible shape");
      std::vector<double> values(static_cast<std::size_t>(m) * d0);
      for (double& v : values) v = binary::get_f64(in, "features");
      r.features = Tensor({m, d0}, std::move(values));
      r.objectness.resize(m);
      for (double& s : r.objectness) s = binary::get_f64(in, "objectness");
      out.push_back(std::move(r));
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<RawRegionSet> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("features: cannot open " + path.string());
  std::vector<RawRegionSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      RawRegionSet r;
      r.image_id = j.at("image_id").get<std::string>();
      const auto m = j.at("M").get<std::size_t>();
      const auto d0 = j.at("D0").get<std::size_t>();
      const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
      r.objectness = j.at("objectness").get<std::vector<double>>();
      if (m == 0 || d0 == 0 || rows.size() != m || r.objectness.size() != m) {
        throw FormatError("region count does not match M");
      }
      std::vector<double> values;
      values.reserve(m * d0);
      for (const auto& row : rows) {
        if (row.size() != d0) throw FormatError("feature row width does not match D0");
        values.insert(values.end(), row.begin(), row.end());
      }
      r.features = Tensor({m, d0}, std::move(values));
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<RawRegionSet> read_feature_records(const std::filesystem::path& path) {
  std::vector<RawRegionSet> records = is_jsonl(path) ? read_jsonl(path) : read_binary(path);
  std::set<std::string> ids;
  for (const auto& r : records) {
    check_record(r, path.string());
    if (!ids.insert(r.image_id).second) {
      throw FormatError(path.string() + ": duplicate image_id '" + r.image_id + "'");
    }
  }
  return records;
}

RawRegionSet normalize_regions(RawRegionSet raw, std::size_t regions) {
  if (regions == 0) throw Error("normalize_regions: region count must be positive");
  sort_by_objectness(raw);
  const std::size_t have = raw.region_count();
  if (have == regions) return raw;
  const std::size_t d0 = raw.features.cols();
  Tensor features({regions, d0});
  const std::size_t keep = std::min(have, regions);
  for (std::size_t m = 0; m < keep; ++m) {
    auto src = raw.features.row(m);
    std::copy(src.begin(), src.end(), features.row(m).begin());
  }
  raw.objectness.resize(regions, 0.0);
  raw.features = std::move(features);
  return raw;
}

FeatureMap load_features(const std::filesystem::path& path, std::size_t regions, std::size_t raw_dim) {
  FeatureMap out;
  for (auto& r : read_feature_records(path)) {
    if (raw_dim != 0 && r.features.cols() != raw_dim) {
      throw FormatError(path.string() + ": record '" + r.image_id + "' has width " +
                        std::to_string(r.features.cols()) + ", expected " + std::to_string(raw_dim));
    }
    std::string id = r.image_id;
    out.emplace(std::move(id), normalize_regions(std::move(r), regions));
  }
  return out;
}

void save_features(const std::filesystem::path& path, const std::vector<RawRegionSet>& records) {
  for (const auto& r : records) {
    if (r.features.rank() != 2 || r.features.rows() != r.region_count()) {
      throw ShapeError("save_features: record '" + r.image_id + "' has inconsistent shapes");
    }
  }
  if (is_jsonl(path)) {
    std::ofstream out(path);
    if (!out) throw Error("features: cannot write " + path.string());
    for (const auto& r : records) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t m = 0; m < r.region_count(); ++m) {
        auto row = r.features.row(m);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      const nlohmann::json j = {{"image_id", r.image_id},
                                {"M", r.region_count()},
                                {"D0", r.features.cols()},
                                {"features", rows},
                                {"objectness", r.objectness}};
      out << j.dump() << '\n';
    }
    if (!out) throw Error("features: write failed for " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("features: cannot write " + path.string());
  for (const auto& r : records) {
    binary::put_string(out, r.image_id);
    binary::put_u32(out, static_cast<std::uint32_t>(r.region_count()));
    binary::put_u32(out, static_cast<std::uint32_t>(r.features.cols()));
    for (double v : r.features.values()) binary::put_f64(out, v);
    for (double s : r.objectness) binary::put_f64(out, s);
  }
  if (!out) throw Error("features: write failed for " + path.string());
}

}  // namespace topicpara

#include "topicpara/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "topicpara/error.hpp"

namespace topicpara {

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw Error("uniform_index: empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % range);
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("categorical: weights must have positive sum");
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

RngStream RngStream::fork(std::uint64_t salt) {
  const std::uint64_t base = engine_();
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return RngStream(z ^ (z >> 31));
}

std::string RngStream::serialize() const {
  std::ostringstream out;
  out << kAlgorithm << ' ' << seed_ << ' ' << engine_;
  return out.str();
}

RngStream RngStream::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string algorithm;
  std::uint64_t seed = 0;
  in >> algorithm >> seed;
  if (!in || algorithm != kAlgorithm) throw FormatError("unsupported rng state: " + algorithm);
  RngStream stream(seed);
  in >> stream.engine_;
  if (!in) throw FormatError("corrupt rng engine state");
  return stream;
}

}  // namespace topicpara

#include "topicpara/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "binary_io.hpp"
#include "topicpara/error.hpp"

namespace topicpara {

Checkpoint Checkpoint::create(TrainConfig config, Vocabulary vocab, ObjectLexicon lexicon) {
  config.dims.vocab_size = vocab.size();
  config.validate();
  Checkpoint c;
  c.config = config;
  c.vocab = std::move(vocab);
  c.lexicon = std::move(lexicon);
  c.state.rng = RngStream(config.seed);
  RngStream init = c.state.rng.fork(0x1417);
  c.model = Model::create(config.dims, init, config.batch_norm);
  c.optimizer = Adam(AdamOptions{config.lr_phase1});
  return c;
}

namespace {

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  binary::put_string(out, name);
  binary::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) binary::put_u64(out, d);
  for (double v : t.values()) binary::put_f64(out, v);
}

std::map<std::string, Tensor> read_tensors(std::istream& in) {
  std::map<std::string, Tensor> out;
  const std::uint32_t count = binary::get_u32(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binary::get_string(in, "tensor name");
    const std::uint32_t rank = binary::get_u32(in, "tensor rank");
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: tensor '" + name + "' has bad rank");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = binary::get_u64(in, "tensor dims");
      if (d > (1ull << 32)) throw FormatError("checkpoint: tensor '" + name + "' has implausible dims");
      n *= d;
    }
    if (n > (1ull << 32)) throw FormatError("checkpoint: tensor '" + name + "' is implausibly large");
    std::vector<double> data(n);
    for (double& v : data) v = binary::get_f64(in, "tensor data");
    if (!out.emplace(name, Tensor(shape, std::move(data))).second) {
      throw FormatError("checkpoint: duplicate tensor '" + name + "'");
    }
  }
  return out;
}

Tensor take(std::map<std::string, Tensor>& tensors, const std::string& name, const Shape& expected) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
  if (it->second.shape() != expected) {
    throw FormatError("checkpoint: tensor '" + name + "' has shape " + to_string(it->second.shape()) +
                      ", expected " + to_string(expected));
  }
  Tensor t = std::move(it->second);
  tensors.erase(it);
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  nlohmann::json lexicon = nlohmann::json::array();
  for (const auto& e : c.lexicon.entries()) lexicon.push_back({e.token, e.frequency});
  const nlohmann::json header = {
      {"config", to_json(c.config)},
      {"vocab", c.vocab.regular_tokens()},
      {"lexicon", lexicon},
      {"state",
       {{"phase", c.state.phase},
        {"step", c.state.step},
        {"epoch", c.state.epoch},
        {"best_score", c.state.best_score},
        {"epochs_since_best", c.state.epochs_since_best},
        {"rng", c.state.rng.serialize()}}},
      {"optimizer", {{"lr", c.optimizer.options().lr}, {"steps", c.optimizer.steps()}}},
  };
  const std::string text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("checkpoint: cannot write " + tmp.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    binary::put_u32(out, kCheckpointVersion);
    binary::put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const Parameter* p : c.model.parameters()) tensors.emplace_back("param/" + p->name, &p->value);
    tensors.emplace_back("state/cae.bn.running_mean", &c.model.cae.bn_running_mean);
    tensors.emplace_back("state/cae.bn.running_var", &c.model.cae.bn_running_var);
    for (const auto& [name, t] : c.optimizer.first_moments()) tensors.emplace_back("adam.m/" + name, &t);
    for (const auto& [name, t] : c.optimizer.second_moments()) tensors.emplace_back("adam.v/" + name, &t);
    binary::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) put_tensor(out, name, *t);
    out.flush();
    if (!out) throw Error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path.string());
  try {
    char magic[sizeof kCheckpointMagic];
    binary::read_exact(in, magic, sizeof magic, "magic");
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw FormatError("not a checkpoint file");
    const std::uint32_t version = binary::get_u32(in, "version");
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t header_len = binary::get_u64(in, "header length");
    if (header_len > (1ull << 30)) throw FormatError("implausible header length");
    std::string text(header_len, '\0');
    binary::read_exact(in, text.data(), header_len, "header");
    const nlohmann::json header = nlohmann::json::parse(text);

    const TrainConfig config = config_from_json(header.at("config"));
    Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != config.dims.vocab_size) throw FormatError("vocabulary size disagrees with config");
    std::vector<LexiconEntry> entries;
    for (const auto& e : header.at("lexicon")) entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::size_t>()});
    Checkpoint c = Checkpoint::create(config, std::move(vocab), ObjectLexicon(std::move(entries)));

    const auto& s = header.at("state");
    c.state.phase = s.at("phase").get<int>();
    c.state.step = s.at("step").get<std::uint64_t>();
    c.state.epoch = s.at("epoch").get<std::uint64_t>();
    c.state.best_score = s.at("best_score").get<double>();
    c.state.epochs_since_best = s.at("epochs_since_best").get<std::uint64_t>();
    c.state.rng = RngStream::deserialize(s.at("rng").get<std::string>());

    std::map<std::string, Tensor> tensors = read_tensors(in);
    for (Parameter* p : c.model.parameters()) {
      p->value = take(tensors, "param/" + p->name, p->value.shape());
      p->zero_grad();
    }
    c.model.cae.bn_running_mean =
        take(tensors, "state/cae.bn.running_mean", c.model.cae.bn_running_mean.shape());
    c.model.cae.bn_running_var = take(tensors, "state/cae.bn.running_var", c.model.cae.bn_running_var.shape());
    std::map<std::string, Tensor> m, v;
    for (const Parameter* p : c.model.parameters()) {
      if (tensors.count("adam.m/" + p->name)) m.emplace(p->name, take(tensors, "adam.m/" + p->name, p->value.shape()));
      if (tensors.count("adam.v/" + p->name)) v.emplace(p->name, take(tensors, "adam.v/" + p->name, p->value.shape()));
    }
    if (!tensors.empty()) throw FormatError("unexpected tensor '" + tensors.begin()->first + "'");
    const auto& opt = header.at("optimizer");
    c.optimizer = Adam(AdamOptions{opt.at("lr").get<double>()});
    c.optimizer.restore(opt.at("steps").get<std::uint64_t>(), std::move(m), std::move(v));
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after tensors");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": bad header: " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace topicpara

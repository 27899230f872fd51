#include "newscnn/checkpoint.hpp"

#include "json.hpp"
#include "newscnn/error.hpp"
#include "newscnn/io.hpp"

namespace newscnn {

namespace {

using json = nlohmann::ordered_json;

json config_json(const ModelConfig& c) {
  return json{{"p", c.p},
              {"m", c.m},
              {"filter_widths", c.filter_widths},
              {"filters_per_width", c.filters_per_width},
              {"pool_size", c.pool_size},
              {"hidden1", c.hidden1},
              {"hidden2", c.hidden2},
              {"dropout_rate", c.dropout_rate},
              {"head", to_string(c.head)}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.p = j.at("p").get<std::size_t>();
  c.m = j.at("m").get<std::size_t>();
  c.filter_widths = j.at("filter_widths").get<std::vector<int>>();
  c.filters_per_width = j.at("filters_per_width").get<std::size_t>();
  c.pool_size = j.at("pool_size").get<std::size_t>();
  c.hidden1 = j.at("hidden1").get<std::size_t>();
  c.hidden2 = j.at("hidden2").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.head = parse_head(j.at("head").get<std::string>());
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

std::string checkpoint_to_json(const Checkpoint& ck) {
  json j;
  j["format"] = "newscnn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config_json(ck.config);
  j["vocab_hash"] = ck.vocab.hash();
  j["vocabulary"] = {{"max_len", ck.vocab.max_len()}, {"tokens", ck.vocab.tokens()}};
  j["embedding"] = {{"mode", to_string(ck.table.mode())},
                    {"rows", ck.table.rows()},
                    {"dim", ck.table.dim()},
                    {"pretrained_hits", ck.table.pretrained_hit_count()},
                    {"data", ck.table.matrix().data}};
  json tensors = json::object();
  ck.params.for_each_tensor([&](const std::string& name, std::span<const double> v) {
    tensors[name] = std::vector<double>(v.begin(), v.end());
  });
  j["parameters"] = std::move(tensors);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "newscnn-checkpoint") throw ParseError(source, 0, "not a newscnn checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError(source, 0, "unsupported checkpoint version " + std::to_string(version));
    }
    ModelConfig config = config_from(j.at("config"));
    config.validate();

    Vocabulary vocab(j.at("vocabulary").at("tokens").get<std::vector<std::string>>(),
                     j.at("vocabulary").at("max_len").get<int>());
    if (vocab.hash() != j.at("vocab_hash").get<std::string>()) {
      throw ParseError(source, 0, "vocabulary does not match its stored hash");
    }

    const json& e = j.at("embedding");
    Matrix m(e.at("rows").get<std::size_t>(), e.at("dim").get<std::size_t>());
    auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != m.data.size()) throw ParseError(source, 0, "embedding data size mismatch");
    if (m.rows != vocab.size() + 1) throw ParseError(source, 0, "embedding rows do not match vocabulary size");
    if (m.cols != config.p) throw ParseError(source, 0, "embedding dim does not match config p");
    m.data = std::move(data);
    EmbeddingTable table(std::move(m), parse_embedding_mode(e.at("mode").get<std::string>()),
                         e.at("pretrained_hits").get<std::size_t>());

    ModelParameters params = ModelParameters::zeros(config);
    const json& tensors = j.at("parameters");
    std::size_t seen = 0;
    params.for_each_tensor([&](const std::string& name, std::span<double> w) {
      if (!tensors.contains(name)) throw ParseError(source, 0, "missing tensor " + name);
      auto values = tensors.at(name).get<std::vector<double>>();
      if (values.size() != w.size()) {
        throw ParseError(source, 0, "tensor " + name + " has " + std::to_string(values.size()) + " values, expected " +
                                        std::to_string(w.size()));
      }
      std::copy(values.begin(), values.end(), w.begin());
      ++seen;
    });
    if (seen != tensors.size()) throw ParseError(source, 0, "checkpoint has unexpected extra tensors");
    return Checkpoint{std::move(config), std::move(vocab), std::move(table), std::move(params)};
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("malformed checkpoint: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path), path.string());
}

void require_compatible_config(const Checkpoint& ck, const ModelConfig& expected) {
  const ModelConfig& c = ck.config;
  auto fail = [](const std::string& field, const std::string& have, const std::string& want) {
    throw Error("checkpoint config mismatch: " + field + " is " + have + ", expected " + want);
  };
  auto num = [](std::size_t v) { return std::to_string(v); };
  if (c.p != expected.p) fail("p", num(c.p), num(expected.p));
  if (c.m != expected.m) fail("m", num(c.m), num(expected.m));
  if (c.filter_widths != expected.filter_widths) fail("filter_widths", "different", "the configured widths");
  if (c.filters_per_width != expected.filters_per_width) {
    fail("filters_per_width", num(c.filters_per_width), num(expected.filters_per_width));
  }
  if (c.pool_size != expected.pool_size) fail("pool_size", num(c.pool_size), num(expected.pool_size));
  if (c.hidden1 != expected.hidden1) fail("hidden1", num(c.hidden1), num(expected.hidden1));
  if (c.hidden2 != expected.hidden2) fail("hidden2", num(c.hidden2), num(expected.hidden2));
  if (c.head != expected.head) fail("head", to_string(c.head), to_string(expected.head));
}

void require_vocabulary(const Checkpoint& ck, const std::string& expected_hash) {
  if (ck.vocab.hash() != expected_hash) {
    throw Error("vocabulary hash mismatch: checkpoint has " + ck.vocab.hash() + ", data gives " + expected_hash);
  }
}

}  // namespace newscnn

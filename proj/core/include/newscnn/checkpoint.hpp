#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"
#include "newscnn/text.hpp"

namespace newscnn {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to reproduce predictions: model configuration, the
// vocabulary (and its hash), the embedding table with its mode, and every
// parameter tensor.
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  EmbeddingTable table;
  ModelParameters params;
};

// Versioned JSON document. Serialization is deterministic: equal checkpoints
// produce identical bytes.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
// Throws ParseError on malformed documents, unknown versions, a vocabulary
// whose hash does not match the stored one, or tensors whose shapes disagree
// with the stored config.
Checkpoint checkpoint_from_json(std::string_view text, const std::string& source = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws Error describing the first difference when `checkpoint` was not
// produced with `expected` (shape-defining fields and head).
void require_compatible_config(const Checkpoint& checkpoint, const ModelConfig& expected);
// Throws Error when the vocabulary hash differs.
void require_vocabulary(const Checkpoint& checkpoint, const std::string& expected_hash);

// ModelConfig <-> JSON object text, shared with run configs.
std::string model_config_to_json(const ModelConfig& config);

}  // namespace newscnn

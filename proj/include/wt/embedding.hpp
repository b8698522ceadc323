#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wt/matrix.hpp"

namespace wt {

// Which embedding matrix of a model to read: the input role, the output role,
// or the single shared matrix of a tied model.
enum class EmbeddingRole { input, output, tied };
EmbeddingRole parse_embedding_role(const std::string& name);
std::string to_string(EmbeddingRole role);

/// Word-vector table: one row of `vectors` per token.
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::vector<std::string> tokens, Matrix vectors);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const Matrix& vectors() const noexcept { return vectors_; }

  std::optional<std::size_t> find(const std::string& token) const;
  std::span<const double> vector(std::size_t row) const { return vectors_.row(row); }

 private:
  std::vector<std::string> tokens_;
  Matrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text interchange format: first line "C H", then "token v1 ... vH".
void write_embedding(const Embedding& emb, const std::filesystem::path& path);
Embedding read_embedding(const std::filesystem::path& path);

}  // namespace wt

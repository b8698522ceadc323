#include "wt/embedding.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "wt/corpus.hpp"
#include "wt/errors.hpp"

namespace wt {

EmbeddingRole parse_embedding_role(const std::string& name) {
  if (name == "input") return EmbeddingRole::input;
  if (name == "output") return EmbeddingRole::output;
  if (name == "tied") return EmbeddingRole::tied;
  throw ConfigError("role", "expected input, output or tied, got '" + name + "'");
}

std::string to_string(EmbeddingRole role) {
  switch (role) {
    case EmbeddingRole::input: return "input";
    case EmbeddingRole::output: return "output";
    case EmbeddingRole::tied: return "tied";
  }
  return "?";
}

Embedding::Embedding(std::vector<std::string> tokens, Matrix vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (tokens_.size() != vectors_.rows())
    throw ShapeError("embedding: " + std::to_string(tokens_.size()) + " tokens but " +
                     std::to_string(vectors_.rows()) + " rows");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw ArgumentError("embedding: duplicate token '" + tokens_[i] + "'");
  }
}

std::optional<std::size_t> Embedding::find(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_embedding(const Embedding& emb, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write embedding " + path.string());
  std::fprintf(f, "%zu %zu\n", emb.size(), emb.dim());
  for (std::size_t r = 0; r < emb.size(); ++r) {
    std::fputs(emb.tokens()[r].c_str(), f);
    for (double v : emb.vector(r)) std::fprintf(f, " %.9g", v);
    std::fputc('\n', f);
  }
  const bool failed = std::ferror(f) != 0;
  std::fclose(f);
  if (failed) throw IoError("failed writing embedding " + path.string());
}

Embedding read_embedding(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw IoError(path.string() + ": empty embedding file");
  const auto header = split_whitespace(lines.front());
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || std::from_chars(header[0].data(), header[0].data() + header[0].size(), count).ec != std::errc() ||
      std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec != std::errc())
    throw IoError(path.string() + ": header must be 'C H'");

  std::vector<std::string> tokens;
  Matrix vectors(count, dim);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    if (tokens.size() == count) throw IoError(path.string() + ": more rows than declared");
    auto parts = split_whitespace(lines[i]);
    if (parts.size() != dim + 1)
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": expected token and " +
                    std::to_string(dim) + " values");
    const std::size_t r = tokens.size();
    for (std::size_t c = 0; c < dim; ++c) {
      try {
        vectors(r, c) = std::stod(parts[c + 1]);
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(i + 1) + ": bad value '" + parts[c + 1] + "'");
      }
    }
    tokens.push_back(std::move(parts[0]));
  }
  if (tokens.size() != count) throw IoError(path.string() + ": fewer rows than declared");
  try {
    return Embedding(std::move(tokens), std::move(vectors));
  } catch (const ArgumentError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace wt

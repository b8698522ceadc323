#include "wt/embed_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "wt/corpus.hpp"
#include "wt/errors.hpp"

namespace wt {

WordPairDataset::WordPairDataset(std::vector<WordPair> pairs) : pairs_(std::move(pairs)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : pairs_) {
    if (!std::isfinite(p.score)) throw ArgumentError("word pairs: non-finite score for " + p.a + "/" + p.b);
    auto key = p.a < p.b ? std::make_pair(p.a, p.b) : std::make_pair(p.b, p.a);
    if (!seen.insert(std::move(key)).second)
      throw ArgumentError("word pairs: duplicate pair " + p.a + "/" + p.b);
  }
}

WordPairDataset read_word_pairs(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<WordPair> pairs;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto parts = split_whitespace(lines[i]);
    if (parts.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(i + 1);
    if (parts.size() < 3) throw IoError(where + ": expected 'word-a word-b score'");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw IoError(where + ": bad score '" + parts[2] + "'");
    }
    first = false;
    pairs.push_back({parts[0], parts[1], score});
  }
  try {
    return WordPairDataset(std::move(pairs));
  } catch (const ArgumentError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "rho=" << std::fixed << report.rho << "\tpairs_used=" << report.pairs_used
      << "\tpairs_skipped_oov=" << report.pairs_skipped_oov;
  return out.str();
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine: length mismatch");
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine: similarity undefined for a zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

namespace {

// Twice the average 1-based rank, so that tied ranks stay integral.
std::vector<std::int64_t> doubled_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<std::int64_t> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    // positions i..j (0-based) share the average rank ((i+1)+(j+1))/2
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> xs) {
  const auto doubled = doubled_ranks(xs);
  std::vector<double> out(doubled.size());
  for (std::size_t i = 0; i < doubled.size(); ++i) out[i] = static_cast<double>(doubled[i]) / 2.0;
  return out;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ArgumentError("spearman: length mismatch");
  if (xs.size() < 2) throw ArgumentError("spearman: need at least two observations");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw NumericError("spearman: non-finite input");

  const auto rx = doubled_ranks(xs);
  const auto ry = doubled_ranks(ys);
  // Exact integer moments of the rank vectors.
  using Wide = __int128;
  Wide sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += static_cast<Wide>(rx[i]) * rx[i];
    syy += static_cast<Wide>(ry[i]) * ry[i];
    sxy += static_cast<Wide>(rx[i]) * ry[i];
  }
  const auto n = static_cast<Wide>(rx.size());
  const Wide cov = n * sxy - sx * sy;
  const Wide vx = n * sxx - sx * sx;
  const Wide vy = n * syy - sy * sy;
  if (vx == 0 || vy == 0) throw NumericError("spearman: correlation undefined for a constant input");
  if (vx == vy) return static_cast<double>(cov) / static_cast<double>(vx);
  const long double denom = std::sqrt(static_cast<long double>(vx) * static_cast<long double>(vy));
  return static_cast<double>(static_cast<long double>(cov) / denom);
}

EvalReport eval_benchmark(const Embedding& emb, const WordPairDataset& data) {
  std::vector<double> sims;
  std::vector<double> human;
  EvalReport report;
  for (const auto& p : data.pairs()) {
    const auto a = emb.find(p.a);
    const auto b = emb.find(p.b);
    if (!a || !b) {
      ++report.pairs_skipped_oov;
      continue;
    }
    sims.push_back(cosine(emb.vector(*a), emb.vector(*b)));
    human.push_back(p.score);
  }
  report.pairs_used = sims.size();
  if (sims.size() < 2)
    throw NumericError("eval_benchmark: insufficient data (" + std::to_string(sims.size()) +
                       " usable pairs of " + std::to_string(data.size()) + ")");
  report.rho = spearman(sims, human);
  return report;
}

std::vector<std::string> shared_words(std::span<const std::string> frequency_ordered,
                                      std::span<const Embedding* const> embeddings,
                                      std::size_t top_k) {
  std::vector<std::string> out;
  for (const auto& w : frequency_ordered) {
    if (top_k != 0 && out.size() >= top_k) break;
    const bool everywhere = std::all_of(embeddings.begin(), embeddings.end(),
                                        [&](const Embedding* e) { return e->find(w).has_value(); });
    if (everywhere) out.push_back(w);
  }
  return out;
}

namespace {

Matrix normalized_rows(const Embedding& emb, std::span<const std::string> words,
                       std::vector<std::string>& missing) {
  Matrix out(words.size(), emb.dim());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto r = emb.find(words[i]);
    if (!r) {
      missing.push_back(words[i]);
      continue;
    }
    const auto v = emb.vector(*r);
    const double norm = std::sqrt(dot(v, v));
    if (norm == 0.0) throw NumericError("distance_correlation: zero vector for '" + words[i] + "'");
    for (std::size_t c = 0; c < v.size(); ++c) out(i, c) = v[c] / norm;
  }
  return out;
}

std::vector<double> cosine_distances(const Matrix& unit) {
  std::vector<double> d;
  d.reserve(unit.rows() * (unit.rows() - 1) / 2);
  for (std::size_t i = 0; i < unit.rows(); ++i)
    for (std::size_t j = i + 1; j < unit.rows(); ++j)
      d.push_back(1.0 - std::clamp(dot(unit.row(i), unit.row(j)), -1.0, 1.0));
  return d;
}

}  // namespace

double distance_correlation(const Embedding& a, const Embedding& b, std::span<const std::string> words) {
  if (words.size() < 3) throw ArgumentError("distance_correlation: need at least 3 words");
  std::vector<std::string> missing;
  const Matrix ua = normalized_rows(a, words, missing);
  const Matrix ub = normalized_rows(b, words, missing);
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string list;
    for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w;
    throw ArgumentError("distance_correlation: words missing from a vocabulary: " + list);
  }
  return spearman(cosine_distances(ua), cosine_distances(ub));
}

}  // namespace wt

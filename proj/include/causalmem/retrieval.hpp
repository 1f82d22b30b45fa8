#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalmem/domain.hpp"
#include "causalmem/gateway.hpp"
#include "causalmem/text.hpp"

namespace causalmem {

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;
inline constexpr double kHybridLexicalWeight = 0.5;
inline constexpr double kHybridEmbeddingWeight = 0.5;

struct RankedCandidate {
  std::string memory_id;
  double lexical_score = 0.0;
  double embedding_score = 0.0;
  double combined_score = 0.0;
};

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// BM25 over one example's memory bank (the bank is the whole corpus).
/// Robertson/Sparck Jones IDF with +0.5 smoothing and a +1 shift keeps every
/// score non-negative.
class Bm25Index {
 public:
  explicit Bm25Index(const std::vector<std::string>& documents) {
    doc_tokens_.reserve(documents.size());
    double total_len = 0.0;
    for (const auto& doc : documents) {
      std::map<std::string, int> counts;
      for (const auto& t : tokenize(doc)) counts[t]++;
      total_len += static_cast<double>(length_of(counts));
      for (const auto& [t, _] : counts) df_[t]++;
      doc_tokens_.push_back(std::move(counts));
    }
    avgdl_ = documents.empty() ? 0.0 : total_len / static_cast<double>(documents.size());
  }

  std::size_t size() const { return doc_tokens_.size(); }

  double score(const std::string& query, std::size_t doc_index) const {
    if (doc_index >= doc_tokens_.size()) throw std::out_of_range("bm25: bad doc index");
    const auto& doc = doc_tokens_[doc_index];
    const double dl = static_cast<double>(length_of(doc));
    double total = 0.0;
    for (const auto& term : tokenize(query)) {
      const auto it = doc.find(term);
      if (it == doc.end()) continue;
      const double tf = static_cast<double>(it->second);
      const double idf = idf_of(term);
      const double denom =
          tf + kBm25K1 * (1.0 - kBm25B + kBm25B * (avgdl_ > 0.0 ? dl / avgdl_ : 0.0));
      total += idf * (tf * (kBm25K1 + 1.0)) / denom;
    }
    return total;
  }

 private:
  static std::size_t length_of(const std::map<std::string, int>& counts) {
    std::size_t n = 0;
    for (const auto& [_, c] : counts) n += static_cast<std::size_t>(c);
    return n;
  }

  double idf_of(const std::string& term) const {
    const auto it = df_.find(term);
    if (it == df_.end()) return 0.0;
    const double n = static_cast<double>(doc_tokens_.size());
    const double df = static_cast<double>(it->second);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
  }

  std::vector<std::map<std::string, int>> doc_tokens_;
  std::map<std::string, int> df_;
  double avgdl_ = 0.0;
};

/// BM25 score of one memory against a query, with the given index supplying
/// the corpus statistics.
inline double lexical_score(const std::string& query, const Bm25Index& index,
                            std::size_t doc_index) {
  return index.score(query, doc_index);
}

namespace detail {

// Min-max over the current pool; a degenerate pool (all values equal) maps
// everything to 1 so the best-score-normalizes-to-1 invariant stays intact.
inline std::vector<double> minmax_normalize(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 1.0);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

}  // namespace detail

/// Combines per-candidate lexical and embedding scores into the hybrid
/// ranking: equal weights over min-max normalized pools, ties broken by
/// memory id ascending.
inline std::vector<RankedCandidate> rank_candidates(const std::vector<std::string>& ids,
                                                    const std::vector<double>& lexical,
                                                    const std::vector<double>& embedding) {
  if (ids.size() != lexical.size() || ids.size() != embedding.size()) {
    throw std::invalid_argument("rank_candidates: length mismatch");
  }
  const auto lex_norm = detail::minmax_normalize(lexical);
  const auto emb_norm = detail::minmax_normalize(embedding);
  std::vector<RankedCandidate> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    RankedCandidate c;
    c.memory_id = ids[i];
    c.lexical_score = lexical[i];
    c.embedding_score = embedding[i];
    c.combined_score =
        kHybridLexicalWeight * lex_norm[i] + kHybridEmbeddingWeight * emb_norm[i];
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.combined_score != b.combined_score) return a.combined_score > b.combined_score;
    return a.memory_id < b.memory_id;
  });
  return out;
}

/// Broad candidate proposal for the intervention stage: top-K of the whole
/// bank by the hybrid score. No role filtering happens here.
inline std::vector<RankedCandidate> propose_candidates(const TaskExample& example, int K,
                                                       Embedder& embedder) {
  if (K < 1) throw std::invalid_argument("propose_candidates: K must be >= 1");
  if (example.bank.entries.empty()) return {};

  std::vector<std::string> ids;
  std::vector<std::string> texts;
  for (const auto& m : example.bank.entries) {
    ids.push_back(m.id);
    texts.push_back(m.text);
  }
  Bm25Index index(texts);

  std::vector<std::string> embed_input;
  embed_input.push_back(example.request);
  for (const auto& t : texts) embed_input.push_back(t);
  const auto vectors = embedder.embed(embed_input);

  std::vector<double> lexical(ids.size());
  std::vector<double> embedding(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    lexical[i] = index.score(example.request, i);
    embedding[i] = cosine_similarity(vectors[0], vectors[i + 1]);
  }

  auto ranked = rank_candidates(ids, lexical, embedding);
  if (ranked.size() > static_cast<std::size_t>(K)) ranked.resize(static_cast<std::size_t>(K));
  return ranked;
}

/// Pure similarity selection: top-k by embedding cosine alone. This is the
/// vector baseline's entire policy.
inline SelectionResult top_k_by_similarity(const TaskExample& example, int k,
                                           Embedder& embedder) {
  if (k < 1) throw std::invalid_argument("top_k_by_similarity: k must be >= 1");
  SelectionResult result;
  result.agent_name = "vector_memory";
  result.example_id = example.id;
  result.prompt = PromptKind::MemoryContext;
  if (example.bank.entries.empty()) {
    result.prompt = PromptKind::NoContext;
    result.flags.push_back("empty_bank");
    return result;
  }

  std::vector<std::string> embed_input;
  embed_input.push_back(example.request);
  for (const auto& m : example.bank.entries) embed_input.push_back(m.text);
  const auto vectors = embedder.embed(embed_input);

  std::vector<std::pair<double, std::string>> scored;
  for (std::size_t i = 0; i < example.bank.entries.size(); ++i) {
    scored.emplace_back(cosine_similarity(vectors[0], vectors[i + 1]),
                        example.bank.entries[i].id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());

  std::vector<const MemoryEntry*> chosen;
  for (std::size_t i = 0; i < take; ++i) {
    result.selected_ids.push_back(scored[i].second);
    chosen.push_back(example.bank.find(scored[i].second));
  }
  result.exposed_ids = result.selected_ids;
  result.context_payload = render_memory_lines(chosen);
  return result;
}

}  // namespace causalmem

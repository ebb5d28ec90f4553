#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "marags/http.hpp"
#include "marags/segmenter.hpp"

namespace marags {

enum class RankerKind { Tfidf, Biencoder, CrossEncoder, EnsembleMeanRank };

inline constexpr RankerKind kAllRankers[] = {RankerKind::Tfidf, RankerKind::Biencoder,
                                             RankerKind::CrossEncoder, RankerKind::EnsembleMeanRank};
inline constexpr RankerKind kDefaultRanker = RankerKind::CrossEncoder;

std::string_view to_string(RankerKind kind);
std::string_view display_name(RankerKind kind);  // "TF-IDF", "Cross-encoder", ...
std::optional<RankerKind> parse_ranker(std::string_view s);

// Lowercased maximal runs of two or more ASCII alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

struct SparseVector {
    std::vector<std::pair<std::uint32_t, double>> entries;  // ascending column

    double dot(const SparseVector& other) const noexcept;
    double norm() const noexcept;
};

/// Per-question TF-IDF model with smoothed idf and L2-normalized rows:
/// weight(t, d) = count(t, d) * (ln((1 + n) / (1 + df(t))) + 1).
class TfidfIndex {
public:
    static TfidfIndex build(const std::vector<std::string>& documents);

    const std::unordered_map<std::string, std::uint32_t>& vocabulary() const noexcept { return vocabulary_; }
    const std::vector<std::size_t>& doc_freq() const noexcept { return doc_freq_; }
    std::size_t n_docs() const noexcept { return doc_vectors_.size(); }
    const std::vector<SparseVector>& doc_vectors() const noexcept { return doc_vectors_; }
    double idf(std::uint32_t column) const { return idf_.at(column); }

    // Unit-length query vector; out-of-vocabulary tokens are ignored.
    SparseVector vectorize(std::string_view text) const;

    std::vector<double> score(std::string_view question) const;

private:
    std::unordered_map<std::string, std::uint32_t> vocabulary_;
    std::vector<std::size_t> doc_freq_;
    std::vector<double> idf_;
    std::vector<SparseVector> doc_vectors_;
};

TfidfIndex build_tfidf_index(const std::vector<Segment>& segments);
std::vector<double> score_tfidf(const TfidfIndex& index, std::string_view question);

struct ServiceConfig {
    std::string base_url;
    std::chrono::milliseconds timeout{10000};
    std::size_t batch_size = 64;
};

/// Client for `POST /embed {texts} -> {vectors}`.
class EmbeddingClient {
public:
    explicit EmbeddingClient(ServiceConfig config);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const Deadline& deadline = {}) const;

private:
    ServiceConfig config_;
    HttpEndpoint endpoint_;
};

/// Client for `POST /score {query, passages} -> {scores}`.
class CrossEncoderClient {
public:
    explicit CrossEncoderClient(ServiceConfig config);

    std::vector<double> score(const std::string& query, const std::vector<std::string>& passages,
                              const Deadline& deadline = {}) const;

private:
    ServiceConfig config_;
    HttpEndpoint endpoint_;
};

std::vector<double> score_dense(const EmbeddingClient& client, const std::string& question,
                                const std::vector<Segment>& segments, const Deadline& deadline = {});
std::vector<double> score_cross(const CrossEncoderClient& client, const std::string& question,
                                const std::vector<Segment>& segments, const Deadline& deadline = {});

// 1-based rank of each candidate: descending score, ties by lower index.
std::vector<std::size_t> ranks_from_scores(const std::vector<double>& scores);

/// Mean rank of each candidate over the given rankings. Each ranking must be
/// a permutation of 1..n over the same n candidates (Error{RaggedInput}).
std::vector<double> fuse_mean_rank(const std::vector<std::vector<std::size_t>>& rankings);

// Candidate indices ordered by ascending mean rank, ties by lower index.
std::vector<std::size_t> mean_rank_order(const std::vector<std::vector<std::size_t>>& rankings);

struct ScoredCandidate {
    std::size_t candidate_index = 0;  // position in the ranked pool
    Segment segment;
    double score = 0.0;  // ensemble candidates carry the negated mean rank
    std::size_t rank = 0;
};

struct RankerClients {
    const EmbeddingClient* embed = nullptr;
    const CrossEncoderClient* cross = nullptr;
};

// Best-first candidates with ranks 1..n assigned.
std::vector<ScoredCandidate> rank_candidates(RankerKind kind, const std::string& question,
                                             const std::vector<Segment>& segments,
                                             const RankerClients& clients, const Deadline& deadline = {});

inline constexpr std::size_t kDefaultTopK = 10;
inline constexpr std::size_t kDefaultCharBudget = 8000;

// Best-first prefix, stopping at k items or before the first candidate that
// would push the cumulative length past `char_budget`.
std::vector<ScoredCandidate> select_top_k(const std::vector<ScoredCandidate>& candidates, std::size_t k,
                                          std::size_t char_budget);

}  // namespace marags

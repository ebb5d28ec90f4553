#include "marags/rankers.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "marags/error.hpp"
#include "marags/text.hpp"

namespace marags {

using json = nlohmann::json;

std::string_view to_string(RankerKind kind) {
    switch (kind) {
        case RankerKind::Tfidf: return "tfidf";
        case RankerKind::Biencoder: return "biencoder";
        case RankerKind::CrossEncoder: return "cross-encoder";
        case RankerKind::EnsembleMeanRank: return "ensemble";
    }
    return "cross-encoder";
}

std::string_view display_name(RankerKind kind) {
    switch (kind) {
        case RankerKind::Tfidf: return "TF-IDF";
        case RankerKind::Biencoder: return "Biencoder";
        case RankerKind::CrossEncoder: return "Cross-encoder";
        case RankerKind::EnsembleMeanRank: return "Ensemble (mean rank)";
    }
    return "Cross-encoder";
}

std::optional<RankerKind> parse_ranker(std::string_view s) {
    const std::string lower = text::to_lower_ascii(s);
    if (lower == "tfidf" || lower == "tf-idf") return RankerKind::Tfidf;
    if (lower == "biencoder" || lower == "bi-encoder" || lower == "dense") return RankerKind::Biencoder;
    if (lower == "cross-encoder" || lower == "crossencoder" || lower == "cross") return RankerKind::CrossEncoder;
    if (lower == "ensemble" || lower == "mean-rank" || lower == "ensemble-mean-rank") return RankerKind::EnsembleMeanRank;
    return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    auto alnum = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    };
    while (i < input.size()) {
        while (i < input.size() && !alnum(input[i])) ++i;
        std::size_t j = i;
        while (j < input.size() && alnum(input[j])) ++j;
        if (j - i >= 2) tokens.push_back(text::to_lower_ascii(input.substr(i, j - i)));
        i = j;
    }
    return tokens;
}

double SparseVector::dot(const SparseVector& other) const noexcept {
    double sum = 0.0;
    auto a = entries.begin();
    auto b = other.entries.begin();
    while (a != entries.end() && b != other.entries.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

double SparseVector::norm() const noexcept {
    double sq = 0.0;
    for (const auto& [col, w] : entries) sq += w * w;
    return std::sqrt(sq);
}

namespace {

// Raw term counts keyed by column; unseen tokens get new columns.
std::map<std::uint32_t, std::size_t> count_terms(const std::vector<std::string>& tokens,
                                                 std::unordered_map<std::string, std::uint32_t>& vocab) {
    std::map<std::uint32_t, std::size_t> counts;
    for (const auto& tok : tokens) {
        auto it = vocab.try_emplace(tok, static_cast<std::uint32_t>(vocab.size())).first;
        ++counts[it->second];
    }
    return counts;
}

// Same, ignoring out-of-vocabulary tokens.
std::map<std::uint32_t, std::size_t> count_known_terms(const std::vector<std::string>& tokens,
                                                       const std::unordered_map<std::string, std::uint32_t>& vocab) {
    std::map<std::uint32_t, std::size_t> counts;
    for (const auto& tok : tokens) {
        if (auto it = vocab.find(tok); it != vocab.end()) ++counts[it->second];
    }
    return counts;
}

SparseVector weigh_and_normalize(const std::map<std::uint32_t, std::size_t>& counts, const std::vector<double>& idf) {
    SparseVector v;
    v.entries.reserve(counts.size());
    for (const auto& [col, tf] : counts) v.entries.emplace_back(col, static_cast<double>(tf) * idf[col]);
    const double n = v.norm();
    if (n > 0.0) {
        for (auto& e : v.entries) e.second /= n;
    }
    return v;
}

}  // namespace

TfidfIndex TfidfIndex::build(const std::vector<std::string>& documents) {
    if (documents.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot build a TF-IDF index over zero segments");
    TfidfIndex index;
    std::vector<std::map<std::uint32_t, std::size_t>> counts;
    counts.reserve(documents.size());
    for (const auto& doc : documents) {
        counts.push_back(count_terms(tokenize(doc), index.vocabulary_));
        index.doc_freq_.resize(index.vocabulary_.size(), 0);
        for (const auto& [col, tf] : counts.back()) ++index.doc_freq_[col];
    }
    const double n = static_cast<double>(documents.size());
    index.idf_.resize(index.doc_freq_.size());
    for (std::size_t col = 0; col < index.doc_freq_.size(); ++col) {
        index.idf_[col] = std::log((1.0 + n) / (1.0 + static_cast<double>(index.doc_freq_[col]))) + 1.0;
    }
    index.doc_vectors_.reserve(counts.size());
    for (const auto& c : counts) index.doc_vectors_.push_back(weigh_and_normalize(c, index.idf_));
    return index;
}

SparseVector TfidfIndex::vectorize(std::string_view text) const {
    return weigh_and_normalize(count_known_terms(tokenize(text), vocabulary_), idf_);
}

std::vector<double> TfidfIndex::score(std::string_view question) const {
    const SparseVector q = vectorize(question);
    std::vector<double> scores;
    scores.reserve(doc_vectors_.size());
    for (const auto& d : doc_vectors_) scores.push_back(q.dot(d));
    return scores;
}

TfidfIndex build_tfidf_index(const std::vector<Segment>& segments) {
    std::vector<std::string> docs;
    docs.reserve(segments.size());
    for (const auto& s : segments) docs.push_back(s.text);
    return TfidfIndex::build(docs);
}

std::vector<double> score_tfidf(const TfidfIndex& index, std::string_view question) {
    return index.score(question);
}

namespace {

json post_service(const HttpEndpoint& endpoint, const std::string& path, const json& body,
                  std::chrono::milliseconds timeout, const Deadline& deadline) {
    if (deadline.expired()) throw Error(ErrorKind::DeadlineExceeded, path + ": sample budget exhausted", 0);
    const HttpResponse res = endpoint.post_json(path, body.dump(), deadline.clamp(timeout));
    if (res.transport == Transport::Timeout) {
        throw Error(ErrorKind::DeadlineExceeded, endpoint.base_url() + path + " timed out", 1);
    }
    if (!res.ok()) {
        throw Error(ErrorKind::ServiceUnavailable,
                    endpoint.base_url() + path + " failed (status " + std::to_string(res.status) + ")", 1);
    }
    try {
        return json::parse(res.body);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedResponse, path + ": " + e.what(), 1);
    }
}

}  // namespace

EmbeddingClient::EmbeddingClient(ServiceConfig config)
    : config_(std::move(config)), endpoint_(config_.base_url) {
    if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<std::vector<double>> EmbeddingClient::embed(const std::vector<std::string>& texts,
                                                        const Deadline& deadline) const {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const std::size_t end = std::min(texts.size(), start + config_.batch_size);
        json body = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                        texts.begin() + static_cast<std::ptrdiff_t>(end))}};
        const json reply = post_service(endpoint_, "/embed", body, config_.timeout, deadline);
        try {
            auto vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
            if (vectors.size() != end - start) {
                throw Error(ErrorKind::LengthMismatch, "/embed returned " + std::to_string(vectors.size()) +
                                                           " vectors for " + std::to_string(end - start) + " texts");
            }
            for (auto& v : vectors) out.push_back(std::move(v));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::MalformedResponse, std::string("/embed: ") + e.what());
        }
    }
    return out;
}

CrossEncoderClient::CrossEncoderClient(ServiceConfig config)
    : config_(std::move(config)), endpoint_(config_.base_url) {
    if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<double> CrossEncoderClient::score(const std::string& query, const std::vector<std::string>& passages,
                                              const Deadline& deadline) const {
    std::vector<double> out;
    out.reserve(passages.size());
    for (std::size_t start = 0; start < passages.size(); start += config_.batch_size) {
        const std::size_t end = std::min(passages.size(), start + config_.batch_size);
        json body = {{"query", query},
                     {"passages", std::vector<std::string>(passages.begin() + static_cast<std::ptrdiff_t>(start),
                                                           passages.begin() + static_cast<std::ptrdiff_t>(end))}};
        const json reply = post_service(endpoint_, "/score", body, config_.timeout, deadline);
        std::vector<double> scores;
        try {
            scores = reply.at("scores").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::MalformedResponse, std::string("/score: ") + e.what());
        }
        if (scores.size() != end - start) {
            throw Error(ErrorKind::LengthMismatch, "/score returned " + std::to_string(scores.size()) +
                                                       " scores for " + std::to_string(end - start) + " passages");
        }
        out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
}

namespace {

std::vector<std::string> texts_of(const std::vector<Segment>& segments) {
    std::vector<std::string> texts;
    texts.reserve(segments.size());
    for (const auto& s : segments) texts.push_back(s.text);
    return texts;
}

void normalize_in_place(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
}

}  // namespace

std::vector<double> score_dense(const EmbeddingClient& client, const std::string& question,
                                const std::vector<Segment>& segments, const Deadline& deadline) {
    if (segments.empty()) return {};
    std::vector<std::string> texts = texts_of(segments);
    texts.insert(texts.begin(), question);
    auto vectors = client.embed(texts, deadline);
    const std::size_t dim = vectors.front().size();
    for (auto& v : vectors) {
        if (v.size() != dim) throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
        normalize_in_place(v);
    }
    std::vector<double> scores;
    scores.reserve(segments.size());
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        scores.push_back(std::inner_product(vectors[0].begin(), vectors[0].end(), vectors[i].begin(), 0.0));
    }
    return scores;
}

std::vector<double> score_cross(const CrossEncoderClient& client, const std::string& question,
                                const std::vector<Segment>& segments, const Deadline& deadline) {
    if (segments.empty()) return {};
    return client.score(question, texts_of(segments), deadline);
}

std::vector<std::size_t> ranks_from_scores(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> ranks(scores.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = pos + 1;
    return ranks;
}

namespace {

// Validates the rankings and returns each candidate's rank sum.
std::vector<std::size_t> rank_sums(const std::vector<std::vector<std::size_t>>& rankings) {
    if (rankings.empty()) throw Error(ErrorKind::RaggedInput, "no rankings to fuse");
    const std::size_t n = rankings.front().size();
    std::vector<std::size_t> sums(n, 0);
    std::vector<char> seen(n);
    for (const auto& ranking : rankings) {
        if (ranking.size() != n) throw Error(ErrorKind::RaggedInput, "rankings differ in length");
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = ranking[i];
            if (r < 1 || r > n || seen[r - 1]) throw Error(ErrorKind::RaggedInput, "ranking is not a permutation of 1..n");
            seen[r - 1] = 1;
            sums[i] += r;
        }
    }
    return sums;
}

}  // namespace

std::vector<double> fuse_mean_rank(const std::vector<std::vector<std::size_t>>& rankings) {
    const auto sums = rank_sums(rankings);
    std::vector<double> means(sums.size());
    const double m = static_cast<double>(rankings.size());
    for (std::size_t i = 0; i < sums.size(); ++i) means[i] = static_cast<double>(sums[i]) / m;
    return means;
}

std::vector<std::size_t> mean_rank_order(const std::vector<std::vector<std::size_t>>& rankings) {
    // Integer sums order identically to the means and avoid float ties.
    const auto sums = rank_sums(rankings);
    std::vector<std::size_t> order(sums.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sums[a] < sums[b]; });
    return order;
}

namespace {

std::vector<ScoredCandidate> assemble(const std::vector<Segment>& segments, const std::vector<double>& scores,
                                      const std::vector<std::size_t>& order) {
    std::vector<ScoredCandidate> out;
    out.reserve(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t i = order[pos];
        out.push_back({i, segments[i], scores[i], pos + 1});
    }
    return out;
}

std::vector<std::size_t> order_from_ranks(const std::vector<std::size_t>& ranks) {
    std::vector<std::size_t> order(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) order[ranks[i] - 1] = i;
    return order;
}

const EmbeddingClient& need(const EmbeddingClient* c) {
    if (!c) throw Error(ErrorKind::InvalidConfig, "biencoder ranking needs an embedding client");
    return *c;
}

const CrossEncoderClient& need(const CrossEncoderClient* c) {
    if (!c) throw Error(ErrorKind::InvalidConfig, "cross-encoder ranking needs a cross-encoder client");
    return *c;
}

}  // namespace

std::vector<ScoredCandidate> rank_candidates(RankerKind kind, const std::string& question,
                                             const std::vector<Segment>& segments,
                                             const RankerClients& clients, const Deadline& deadline) {
    if (segments.empty()) return {};
    std::vector<double> scores;
    switch (kind) {
        case RankerKind::Tfidf:
            scores = score_tfidf(build_tfidf_index(segments), question);
            break;
        case RankerKind::Biencoder:
            scores = score_dense(need(clients.embed), question, segments, deadline);
            break;
        case RankerKind::CrossEncoder:
            scores = score_cross(need(clients.cross), question, segments, deadline);
            break;
        case RankerKind::EnsembleMeanRank: {
            const auto& embed = need(clients.embed);
            const auto& cross = need(clients.cross);
            auto dense = std::async(std::launch::async, [&] { return score_dense(embed, question, segments, deadline); });
            auto joint = std::async(std::launch::async, [&] { return score_cross(cross, question, segments, deadline); });
            const auto lexical = score_tfidf(build_tfidf_index(segments), question);
            const std::vector<std::vector<std::size_t>> rankings = {
                ranks_from_scores(lexical), ranks_from_scores(dense.get()), ranks_from_scores(joint.get())};
            const auto means = fuse_mean_rank(rankings);
            scores.resize(means.size());
            std::transform(means.begin(), means.end(), scores.begin(), [](double m) { return -m; });
            return assemble(segments, scores, mean_rank_order(rankings));
        }
    }
    if (scores.size() != segments.size()) {
        throw Error(ErrorKind::LengthMismatch, "ranker produced a score count different from the candidate count");
    }
    return assemble(segments, scores, order_from_ranks(ranks_from_scores(scores)));
}

std::vector<ScoredCandidate> select_top_k(const std::vector<ScoredCandidate>& candidates, std::size_t k,
                                          std::size_t char_budget) {
    std::vector<ScoredCandidate> out;
    std::size_t used = 0;
    for (const auto& c : candidates) {
        if (out.size() >= k) break;
        if (used + c.segment.char_len > char_budget) break;
        used += c.segment.char_len;
        out.push_back(c);
    }
    return out;
}

}  // namespace marags

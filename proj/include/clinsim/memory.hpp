#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "clinsim/clock.hpp"
#include "clinsim/emotions.hpp"
#include "clinsim/errors.hpp"

// Per-patient memory store and the four-signal retrieval metric:
// semantic (cosine), recency (exponential decay), importance, and
// emotional congruence (Tanimoto).

namespace clinsim {

struct MemoryRecord {
    std::string memory_id;
    std::string text;
    std::vector<double> embedding;  // unit norm
    EmotionVector emotions;         // unit-range
    double importance = 0.5;        // [0, 1]
    Timestamp created_at = 0;
    Timestamp last_accessed = 0;
};

inline void validate_memory(const MemoryRecord& m) {
    double norm2 = 0.0;
    for (double x : m.embedding) norm2 += x * x;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6)
        throw ValidationError("memory '" + m.memory_id + "' embedding is not unit norm");
    if (!(m.importance >= 0.0 && m.importance <= 1.0))
        throw ValidationError("memory '" + m.memory_id + "' importance outside [0,1]");
    if (m.last_accessed < m.created_at)
        throw ValidationError("memory '" + m.memory_id + "' accessed before creation");
    for (double v : m.emotions.values)
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("memory '" + m.memory_id + "' emotion outside unit range");
}

struct RetrievalWeights {
    double semantic = 1.0;
    double recency = 1.0;
    double importance = 1.0;
    double emotion = 1.0;
    double decay_rate = 0.995;  // per unit elapsed
    double unit_hours = 1.0;

    void validate() const {
        if (semantic < 0 || recency < 0 || importance < 0 || emotion < 0)
            throw ValidationError("retrieval weights must be nonnegative");
        if (semantic + recency + importance + emotion <= 0.0)
            throw ValidationError("retrieval weights must sum to a positive value");
        if (!(decay_rate > 0.0 && decay_rate < 1.0))
            throw ValidationError("decay_rate must lie in (0,1)");
        if (!(unit_hours > 0.0)) throw ValidationError("half-life unit must be positive");
    }
};

/// Cosine similarity remapped from [-1,1] onto [0,1].
inline double semantic_score(const std::vector<double>& query, const MemoryRecord& m) {
    if (query.size() != m.embedding.size())
        throw ValidationError("embedding dimension mismatch: query " +
                              std::to_string(query.size()) + " vs memory " +
                              std::to_string(m.embedding.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) dot += query[i] * m.embedding[i];
    return (1.0 + dot) / 2.0;
}

/// decay_rate ^ (elapsed / unit), elapsed measured from last access.
inline double recency_score(Timestamp now, const MemoryRecord& m, double decay_rate,
                            double unit_hours) {
    if (now < m.last_accessed)
        throw ValidationError("clock skew: now precedes last access of memory '" + m.memory_id +
                              "'");
    const double elapsed_units = hours_between(m.last_accessed, now) / unit_hours;
    return std::pow(decay_rate, elapsed_units);
}

inline double importance_score(const MemoryRecord& m) { return m.importance; }

struct RetrievedMemory {
    MemoryRecord record;  // snapshot at retrieval time
    double score = 0.0;
};

class MemoryStore {
public:
    void add(MemoryRecord record) {
        for (const auto& m : records_)
            if (m.memory_id == record.memory_id)
                throw ValidationError("duplicate memory_id: '" + record.memory_id + "'");
        validate_memory(record);
        records_.push_back(std::move(record));
    }

    bool contains(const std::string& memory_id) const {
        for (const auto& m : records_)
            if (m.memory_id == memory_id) return true;
        return false;
    }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<MemoryRecord>& records() const { return records_; }

    /// Top-k by the weighted four-signal score. Ties break by newer
    /// created_at, then lexicographic memory_id. Returned records have
    /// last_accessed bumped to `now`; everything else is untouched.
    std::vector<RetrievedMemory> retrieve(const std::vector<double>& query,
                                          const EmotionVector& mood, Timestamp now, std::size_t k,
                                          const RetrievalWeights& weights) {
        weights.validate();
        struct Scored {
            double score;
            std::size_t index;
        };
        std::vector<Scored> scored;
        scored.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const MemoryRecord& m = records_[i];
            const double s = weights.semantic * semantic_score(query, m) +
                             weights.recency * recency_score(now, m, weights.decay_rate,
                                                             weights.unit_hours) +
                             weights.importance * importance_score(m) +
                             weights.emotion * tanimoto(mood, m.emotions).value;
            scored.push_back({s, i});
        }
        const auto better = [this](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            const MemoryRecord& ma = records_[a.index];
            const MemoryRecord& mb = records_[b.index];
            if (ma.created_at != mb.created_at) return ma.created_at > mb.created_at;
            return ma.memory_id < mb.memory_id;
        };
        const std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);

        std::vector<RetrievedMemory> out;
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            records_[scored[i].index].last_accessed = now;
            out.push_back({records_[scored[i].index], scored[i].score});
        }
        return out;
    }

private:
    std::vector<MemoryRecord> records_;
};

namespace detail {

inline std::string escape_log_text(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

/// Memory log dump: one record per line (id, timestamps, importance, the 27
/// unit-range emotion values, text). Embeddings go to a textual sidecar so
/// dumps stay diffable.
inline void dump_store(const MemoryStore& store, std::ostream& log, std::ostream& embeddings) {
    char buf[32];
    for (const auto& m : store.records()) {
        log << m.memory_id << '\t' << format_iso8601(m.created_at) << '\t'
            << format_iso8601(m.last_accessed) << '\t';
        std::snprintf(buf, sizeof(buf), "%.6f", m.importance);
        log << buf;
        for (double v : m.emotions.values) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            log << '\t' << buf;
        }
        log << '\t' << detail::escape_log_text(m.text) << '\n';

        embeddings << m.memory_id;
        for (double v : m.embedding) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            embeddings << ' ' << buf;
        }
        embeddings << '\n';
    }
}

}  // namespace clinsim

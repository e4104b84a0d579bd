#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/hashing.hpp"

namespace clinsim {

/// Produces unit-norm vectors of a fixed dimension.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Deterministic feature-hashing embedder: lowercased word tokens hashed
/// into signed buckets, then L2-normalized. No model, no network; the same
/// text always maps to the same unit vector.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0x5eed)
        : dim_(dim), seed_(seed) {}

    std::size_t dim() const override { return dim_; }

    std::vector<double> embed(std::string_view text) override {
        std::vector<double> v(dim_, 0.0);
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            const std::uint64_t h = fnv1a64(token, seed_ ^ 14695981039346656037ull);
            const std::size_t bucket = static_cast<std::size_t>(h % dim_);
            v[bucket] += (h >> 63) ? -1.0 : 1.0;
            token.clear();
        };
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c)))
                token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            else
                flush();
        }
        flush();

        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (norm2 == 0.0) {
            v[0] = 1.0;  // empty or token-free text still embeds to a unit vector
            return v;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        return v;
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

}  // namespace clinsim

#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace vperc {

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
  public:
    explicit UnionFind(std::size_t n = 0) { reset(n); }

    void reset(std::size_t n) {
        parent_.resize(n);
        std::iota(parent_.begin(), parent_.end(), 0);
        size_.assign(n, 1);
    }

    std::int64_t find(std::int64_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

    bool same(std::int64_t a, std::int64_t b) { return find(a) == find(b); }

    std::size_t size() const { return parent_.size(); }

  private:
    std::vector<std::int64_t> parent_;
    std::vector<std::int64_t> size_;
};

}  // namespace vperc

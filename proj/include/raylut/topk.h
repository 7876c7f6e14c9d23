#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace raylut {

enum class Order { Ascending, Descending };

/// Bounded heap keeping the k best (score, id) pairs. Ties go to the lower id.
template <typename Score>
class TopK {
   public:
    struct Item {
        Score score;
        std::int64_t id;
    };

    TopK(std::size_t k, Order order) : k_(k), order_(order) { heap_.reserve(k); }

    bool better(const Item& a, const Item& b) const {
        if (a.score != b.score)
            return order_ == Order::Ascending ? a.score < b.score : a.score > b.score;
        return a.id < b.id;
    }

    void push(std::int64_t id, Score score) {
        if (k_ == 0) return;
        const Item it{score, id};
        auto cmp = [this](const Item& a, const Item& b) { return better(a, b); };
        if (heap_.size() < k_) {
            heap_.push_back(it);
            std::push_heap(heap_.begin(), heap_.end(), cmp);
        } else if (better(it, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), cmp);
            heap_.back() = it;
            std::push_heap(heap_.begin(), heap_.end(), cmp);
        }
    }

    std::size_t size() const { return heap_.size(); }

    /// Best first. Leaves the heap empty.
    std::vector<Item> take_sorted() {
        auto cmp = [this](const Item& a, const Item& b) { return better(a, b); };
        std::sort_heap(heap_.begin(), heap_.end(), cmp);
        return std::move(heap_);
    }

   private:
    std::size_t k_;
    Order order_;
    std::vector<Item> heap_;
};

} // namespace raylut

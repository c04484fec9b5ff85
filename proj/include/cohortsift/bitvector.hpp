#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cohortsift {

// Fixed-length packed boolean vector. Bits past size() are always zero so
// popcount and equality work word-wise.
class BitVector {
public:
    using Word = std::uint64_t;
    static constexpr std::size_t kWordBits = 64;

    BitVector() = default;
    explicit BitVector(std::size_t size, bool value = false)
        : size_(size), words_((size + kWordBits - 1) / kWordBits, value ? ~Word{0} : Word{0})
    {
        trim();
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }

    [[nodiscard]] bool test(std::size_t i) const noexcept
    {
        return (words_[i / kWordBits] >> (i % kWordBits)) & Word{1};
    }
    void set(std::size_t i, bool value = true) noexcept
    {
        Word const mask = Word{1} << (i % kWordBits);
        if (value) {
            words_[i / kWordBits] |= mask;
        } else {
            words_[i / kWordBits] &= ~mask;
        }
    }
    [[nodiscard]] bool operator[](std::size_t i) const noexcept { return test(i); }

    [[nodiscard]] std::size_t count() const noexcept
    {
        std::size_t n = 0;
        for (Word w : words_) {
            n += static_cast<std::size_t>(std::popcount(w));
        }
        return n;
    }

    [[nodiscard]] std::span<Word const> words() const noexcept { return words_; }
    [[nodiscard]] std::span<Word> words() noexcept { return words_; }

    BitVector& operator&=(BitVector const& o) noexcept
    {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    BitVector& operator|=(BitVector const& o) noexcept
    {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    BitVector& operator^=(BitVector const& o) noexcept
    {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
        return *this;
    }
    void flip() noexcept
    {
        for (Word& w : words_) w = ~w;
        trim();
    }

    friend BitVector operator&(BitVector a, BitVector const& b) noexcept { return a &= b; }
    friend BitVector operator|(BitVector a, BitVector const& b) noexcept { return a |= b; }
    friend BitVector operator^(BitVector a, BitVector const& b) noexcept { return a ^= b; }
    friend BitVector operator~(BitVector a) noexcept
    {
        a.flip();
        return a;
    }
    friend bool operator==(BitVector const&, BitVector const&) = default;

    // popcount(a & b) without materializing the intersection.
    friend std::size_t count_and(BitVector const& a, BitVector const& b) noexcept
    {
        std::size_t n = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i) {
            n += static_cast<std::size_t>(std::popcount(a.words_[i] & b.words_[i]));
        }
        return n;
    }

    // Number of positions where a and b agree.
    friend std::size_t count_equal(BitVector const& a, BitVector const& b) noexcept
    {
        std::size_t diff = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i) {
            diff += static_cast<std::size_t>(std::popcount(a.words_[i] ^ b.words_[i]));
        }
        return a.size_ - diff;
    }

private:
    void trim() noexcept
    {
        if (size_ % kWordBits != 0 && !words_.empty()) {
            words_.back() &= (Word{1} << (size_ % kWordBits)) - 1;
        }
    }

    std::size_t size_ = 0;
    std::vector<Word> words_;
};

} // namespace cohortsift

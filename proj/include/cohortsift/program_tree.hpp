#pragma once

#include "cohortsift/bitvector.hpp"
#include "cohortsift/features.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cohortsift {

/// Boolean and/or tree over (possibly negated) feature literals.
///
/// Connectives hold at least one child. Trees produced by the learner are
/// normalized: no connective directly under the same connective, no
/// single-child connectives and no repeated literal among siblings.
class ProgramTree {
public:
    enum class Kind { And, Or, Literal };

    [[nodiscard]] static ProgramTree literal(std::size_t feature, bool negated = false);
    [[nodiscard]] static ProgramTree all_of(std::vector<ProgramTree> children);
    [[nodiscard]] static ProgramTree any_of(std::vector<ProgramTree> children);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_literal() const noexcept { return kind_ == Kind::Literal; }
    [[nodiscard]] std::size_t feature() const noexcept { return feature_; }
    [[nodiscard]] bool negated() const noexcept { return negated_; }
    [[nodiscard]] std::vector<ProgramTree> const& children() const noexcept { return children_; }
    [[nodiscard]] std::vector<ProgramTree>& children() noexcept { return children_; }

    void set_kind(Kind k) noexcept { kind_ = k; }
    void set_negated(bool n) noexcept { negated_ = n; }

    /// Value on one row. Throws Error if a literal indexes past the row.
    [[nodiscard]] bool evaluate(BitVector const& row) const;
    /// Values on every row of a column-major matrix at once.
    [[nodiscard]] BitVector evaluate(std::span<BitVector const> columns, std::size_t rows) const;

    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] std::size_t depth() const noexcept;
    [[nodiscard]] std::size_t max_feature() const noexcept;
    /// Every literal, in preorder.
    [[nodiscard]] std::vector<ProgramTree const*> literals() const;

    /// Flattens same-connective nesting and drops repeated sibling literals.
    /// Single-child connectives are kept (the learner uses them as slots).
    void flatten();
    /// flatten() plus collapsing of single-child connectives.
    [[nodiscard]] ProgramTree normalized() const;
    [[nodiscard]] bool is_normalized() const;

    /// Surface syntax, e.g. or(and($A_t1 !$B_t0.5) $C_t2).
    [[nodiscard]] std::string to_string(std::span<FeatureId const> features) const;

    friend bool operator==(ProgramTree const&, ProgramTree const&) = default;

private:
    Kind kind_ = Kind::Literal;
    std::size_t feature_ = 0;
    bool negated_ = false;
    std::vector<ProgramTree> children_;
};

/// Inverse of ProgramTree::to_string. `resolve` maps each literal's feature to
/// an index and may throw to reject unknown features.
[[nodiscard]] ProgramTree parse_tree(std::string_view text,
                                     std::function<std::size_t(FeatureId const&)> const& resolve);

/// Parses against a fixed feature list; unknown features throw Error.
[[nodiscard]] ProgramTree parse_tree(std::string_view text, std::span<FeatureId const> features);

} // namespace cohortsift

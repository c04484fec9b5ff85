#include "cohortsift/program_tree.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <utility>

#include <fmt/format.h>

namespace cohortsift {

ProgramTree ProgramTree::literal(std::size_t feature, bool negated)
{
    ProgramTree t;
    t.kind_ = Kind::Literal;
    t.feature_ = feature;
    t.negated_ = negated;
    return t;
}

namespace {

ProgramTree make_connective(ProgramTree::Kind kind, std::vector<ProgramTree> children)
{
    if (children.empty()) {
        throw Error("and/or nodes need at least one child");
    }
    ProgramTree t = ProgramTree::literal(0);
    t.set_kind(kind);
    t.children() = std::move(children);
    return t;
}

} // namespace

ProgramTree ProgramTree::all_of(std::vector<ProgramTree> children)
{
    return make_connective(Kind::And, std::move(children));
}

ProgramTree ProgramTree::any_of(std::vector<ProgramTree> children)
{
    return make_connective(Kind::Or, std::move(children));
}

bool ProgramTree::evaluate(BitVector const& row) const
{
    switch (kind_) {
    case Kind::Literal:
        if (feature_ >= row.size()) {
            throw Error(fmt::format("literal index {} out of range for row of {}", feature_, row.size()));
        }
        return row.test(feature_) != negated_;
    case Kind::And:
        return std::all_of(children_.begin(), children_.end(), [&](auto const& c) { return c.evaluate(row); });
    case Kind::Or:
        return std::any_of(children_.begin(), children_.end(), [&](auto const& c) { return c.evaluate(row); });
    }
    return false;
}

namespace {

void eval_into(ProgramTree const& t, std::span<BitVector const> columns, BitVector& out)
{
    if (t.is_literal()) {
        if (t.feature() >= columns.size()) {
            throw Error(fmt::format("literal index {} out of range for {} columns", t.feature(), columns.size()));
        }
        out = columns[t.feature()];
        if (t.negated()) out.flip();
        return;
    }
    auto const& kids = t.children();
    eval_into(kids[0], columns, out);
    BitVector tmp;
    for (std::size_t i = 1; i < kids.size(); ++i) {
        eval_into(kids[i], columns, tmp);
        if (t.kind() == ProgramTree::Kind::And) {
            out &= tmp;
        } else {
            out |= tmp;
        }
    }
}

} // namespace

BitVector ProgramTree::evaluate(std::span<BitVector const> columns, std::size_t rows) const
{
    BitVector out(rows);
    eval_into(*this, columns, out);
    return out;
}

std::size_t ProgramTree::size() const noexcept
{
    std::size_t n = 1;
    for (auto const& c : children_) n += c.size();
    return n;
}

std::size_t ProgramTree::depth() const noexcept
{
    std::size_t d = 0;
    for (auto const& c : children_) d = std::max(d, c.depth());
    return d + 1;
}

std::size_t ProgramTree::max_feature() const noexcept
{
    if (is_literal()) return feature_;
    std::size_t m = 0;
    for (auto const& c : children_) m = std::max(m, c.max_feature());
    return m;
}

std::vector<ProgramTree const*> ProgramTree::literals() const
{
    std::vector<ProgramTree const*> out;
    auto walk = [&](auto&& self, ProgramTree const& t) -> void {
        if (t.is_literal()) {
            out.push_back(&t);
            return;
        }
        for (auto const& c : t.children_) self(self, c);
    };
    walk(walk, *this);
    return out;
}

void ProgramTree::flatten()
{
    if (is_literal()) return;
    std::vector<ProgramTree> kids;
    kids.reserve(children_.size());
    for (auto& c : children_) {
        c.flatten();
        if (c.kind_ == kind_) {
            for (auto& g : c.children_) kids.push_back(std::move(g));
        } else {
            kids.push_back(std::move(c));
        }
    }
    std::vector<ProgramTree> unique;
    unique.reserve(kids.size());
    for (auto& k : kids) {
        bool dup = k.is_literal() && std::any_of(unique.begin(), unique.end(), [&](ProgramTree const& u) {
            return u.is_literal() && u.feature_ == k.feature_ && u.negated_ == k.negated_;
        });
        if (!dup) unique.push_back(std::move(k));
    }
    children_ = std::move(unique);
}

ProgramTree ProgramTree::normalized() const
{
    ProgramTree t = *this;
    auto collapse = [](auto&& self, ProgramTree& n) -> void {
        for (auto& c : n.children_) self(self, c);
        if (!n.is_literal() && n.children_.size() == 1) {
            ProgramTree only = std::move(n.children_[0]);
            n = std::move(only);
        }
    };
    // Collapsing can expose new same-connective nesting and vice versa.
    for (int i = 0; i < 64 && !t.is_normalized(); ++i) {
        collapse(collapse, t);
        t.flatten();
    }
    return t;
}

bool ProgramTree::is_normalized() const
{
    if (is_literal()) return true;
    if (children_.size() < 2) return false;
    for (std::size_t i = 0; i < children_.size(); ++i) {
        auto const& c = children_[i];
        if (c.kind_ == kind_ || !c.is_normalized()) return false;
        if (c.is_literal()) {
            for (std::size_t j = i + 1; j < children_.size(); ++j) {
                auto const& d = children_[j];
                if (d.is_literal() && d.feature_ == c.feature_ && d.negated_ == c.negated_) return false;
            }
        }
    }
    return true;
}

std::string ProgramTree::to_string(std::span<FeatureId const> features) const
{
    if (is_literal()) {
        if (feature_ >= features.size()) {
            throw Error(fmt::format("literal index {} has no feature name", feature_));
        }
        return fmt::format("{}${}", negated_ ? "!" : "", features[feature_].name());
    }
    std::string s = kind_ == Kind::And ? "and(" : "or(";
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i) s.push_back(' ');
        s += children_[i].to_string(features);
    }
    s.push_back(')');
    return s;
}

namespace {

class TreeParser {
public:
    TreeParser(std::string_view text, std::function<std::size_t(FeatureId const&)> const& resolve)
        : text_(text), resolve_(resolve)
    {
    }

    ProgramTree parse()
    {
        ProgramTree t = node();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
        return t;
    }

private:
    [[noreturn]] void fail(std::string_view what) const
    {
        throw Error(fmt::format("tree syntax error at offset {}: {}", pos_, what));
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(std::string_view s)
    {
        if (text_.substr(pos_, s.size()) == s) {
            pos_ += s.size();
            return true;
        }
        return false;
    }

    ProgramTree node()
    {
        skip_ws();
        if (consume("and(")) return connective(ProgramTree::Kind::And);
        if (consume("or(")) return connective(ProgramTree::Kind::Or);
        bool const negated = consume("!");
        if (!consume("$")) fail("expected and(, or( or a $literal");
        std::size_t const start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ')' && text_[pos_] != '(' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (pos_ == start) fail("empty literal name");
        FeatureId const id = FeatureId::parse(text_.substr(start, pos_ - start));
        return ProgramTree::literal(resolve_(id), negated);
    }

    ProgramTree connective(ProgramTree::Kind kind)
    {
        std::vector<ProgramTree> kids;
        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) fail("unterminated connective");
            if (consume(")")) break;
            kids.push_back(node());
        }
        if (kids.empty()) fail("empty connective");
        return kind == ProgramTree::Kind::And ? ProgramTree::all_of(std::move(kids))
                                              : ProgramTree::any_of(std::move(kids));
    }

    std::string_view text_;
    std::function<std::size_t(FeatureId const&)> const& resolve_;
    std::size_t pos_ = 0;
};

} // namespace

ProgramTree parse_tree(std::string_view text, std::function<std::size_t(FeatureId const&)> const& resolve)
{
    return TreeParser(text, resolve).parse();
}

ProgramTree parse_tree(std::string_view text, std::span<FeatureId const> features)
{
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < features.size(); ++i) index.emplace(features[i].name(), i);
    return parse_tree(text, [&](FeatureId const& f) {
        auto it = index.find(f.name());
        if (it == index.end()) throw Error(fmt::format("unknown feature '{}'", f.name()));
        return it->second;
    });
}

} // namespace cohortsift

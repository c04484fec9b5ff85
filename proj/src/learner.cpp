#include "cohortsift/learner.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>

namespace cohortsift {

double score_tree(ProgramTree const& tree, FeatureMatrix const& matrix)
{
    if (matrix.rows() == 0) return 0.0;
    BitVector const pred = tree.evaluate(matrix.columns(), matrix.rows());
    return static_cast<double>(count_equal(pred, matrix.target())) / static_cast<double>(matrix.rows());
}

namespace {

std::vector<std::size_t> top_by_mi(FeatureMatrix const& matrix, BitVector const& signal, std::size_t k,
                                   std::set<std::size_t> const& exclude)
{
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(matrix.cols());
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (!exclude.contains(j)) scored.emplace_back(class_mi(matrix.column(j), signal), j);
    }
    std::size_t const keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](auto const& a, auto const& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<std::size_t> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(scored[i].second);
    return out;
}

std::set<std::size_t> features_of(ProgramTree const& tree)
{
    std::set<std::size_t> s;
    for (auto const* lit : tree.literals()) s.insert(lit->feature());
    return s;
}

} // namespace

std::vector<std::size_t> dynamic_select(ProgramTree const& exemplar, FeatureMatrix const& matrix, std::size_t k)
{
    if (k == 0) throw Error("dynamic feature count must be >= 1");
    BitVector const errors = exemplar.evaluate(matrix.columns(), matrix.rows()) ^ matrix.target();
    return top_by_mi(matrix, errors, k, features_of(exemplar));
}

namespace {

using Path = std::vector<std::uint32_t>;

ProgramTree& node_at(ProgramTree& t, Path const& path)
{
    ProgramTree* n = &t;
    for (auto i : path) n = &n->children()[i];
    return *n;
}

void collect_paths(ProgramTree const& t, Path& cur, std::vector<Path>& connectives, std::vector<Path>& literals,
                   std::vector<Path>* all = nullptr)
{
    if (all) all->push_back(cur);
    if (t.is_literal()) {
        literals.push_back(cur);
        return;
    }
    connectives.push_back(cur);
    for (std::uint32_t i = 0; i < t.children().size(); ++i) {
        cur.push_back(i);
        collect_paths(t.children()[i], cur, connectives, literals, all);
        cur.pop_back();
    }
}

ProgramTree::Kind alternate(ProgramTree::Kind k)
{
    return k == ProgramTree::Kind::And ? ProgramTree::Kind::Or : ProgramTree::Kind::And;
}

ProgramTree connective(ProgramTree::Kind k, std::vector<ProgramTree> kids)
{
    return k == ProgramTree::Kind::And ? ProgramTree::all_of(std::move(kids)) : ProgramTree::any_of(std::move(kids));
}

// Unbiased draw in [0, n) straight from the engine, so shuffles are identical
// across standard library implementations.
std::size_t draw(std::mt19937_64& rng, std::size_t n)
{
    std::uint64_t const range = n;
    std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % range);
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[draw(rng, i)]);
    }
}

struct Move {
    enum class Type : std::uint8_t { Add, AddClause, Wrap, Extend, Remove, Flip, Swap };
    Type type;
    Path path;
    std::size_t feature = 0;
    bool negated = false;
    ProgramTree::Kind kind = ProgramTree::Kind::And;
    // AddClause and Wrap literals
    std::vector<std::pair<std::size_t, bool>> clause{};
};

// Two- and three-literal clauses are built from this many of the most
// informative features.
constexpr std::size_t kClauseFeatures = 4;

constexpr std::size_t kEpochShare = 16;
constexpr std::size_t kMinEpoch = 2000;

class Search {
public:
    Search(FeatureMatrix const& matrix, TrainConfig const& config, ProgressObserver const& observer)
        : matrix_(matrix), config_(config), observer_(observer), rng_(config.seed)
    {
    }

    Representation run()
    {
        if (config_.eval_budget < 1) throw Error("evaluation budget must be >= 1");
        if (config_.dynamic_features < 1) throw Error("dynamic feature count must be >= 1");
        if (matrix_.cols() == 0) throw Error("cannot train on a matrix without features");
        if (matrix_.rows() == 0) throw Error("cannot train on a matrix without rows");

        ProgramTree current = initial_literal(std::nullopt);
        double cur_score = *score(current);
        best_ = current;
        best_score_ = cur_score;
        epoch_best_ = current;
        notify();

        // An epoch also ends once it has spent this many evaluations, even
        // while small gains keep coming.
        std::size_t const epoch_cap = std::max<std::size_t>(config_.eval_budget / kEpochShare, kMinEpoch);
        std::size_t stagnant = 0;
        std::size_t epoch = 0;
        bool local_optimum = false;
        while (best_score_ < 1.0 && !exhausted()) {
            bool improved = false;
            if (!local_optimum) {
                auto res = hill_climb(current, cur_score, false);
                if (res == Outcome::NoMove) res = hill_climb(current, cur_score, true);
                improved = res == Outcome::Improved;
                local_optimum = res == Outcome::NoMove;
            }
            if (!exhausted()) {
                ProgramTree child = crossover(current);
                if (!(child == current) && child.depth() <= config_.max_depth) {
                    if (auto s = score(child); s && better(*s, child, cur_score, current)) {
                        current = std::move(child);
                        cur_score = *s;
                        improved = true;
                    }
                }
            }
            if (improved) {
                local_optimum = false;
                stagnant = 0;
                epoch_best_ = current;
                if (cur_score > best_score_) {
                    best_ = current;
                    best_score_ = cur_score;
                    notify();
                }
                if (used_ - epoch_start_ < epoch_cap) continue;
            } else if (++stagnant < config_.restart_stagnation && used_ - epoch_start_ < epoch_cap) {
                continue;
            }
            epoch_start_ = used_;

            // New epoch from another informative literal; every second epoch
            // starts from the literal deepened with a slot.
            stagnant = 0;
            local_optimum = false;
            ProgramTree fresh = initial_literal(rng_);
            std::optional<double> s;
            if (++epoch % 2 == 0) {
                auto deeper = deepen(fresh);
                if (deeper) {
                    fresh = std::move(deeper->first);
                    s = deeper->second;
                }
            } else {
                s = score(fresh);
            }
            if (!s) break;
            current = std::move(fresh);
            cur_score = *s;
            epoch_best_ = current;
            if (cur_score > best_score_) {
                best_ = current;
                best_score_ = cur_score;
                notify();
            }
        }

        Representation rep;
        rep.tree = best_.normalized();
        rep.train_accuracy = score_tree(rep.tree, matrix_);
        rep.seed = config_.seed;
        rep.evaluations_used = used_;
        return rep;
    }

private:
    enum class Outcome { Improved, NoMove, OutOfBudget };

    [[nodiscard]] bool exhausted() const noexcept { return used_ >= config_.eval_budget; }

    std::optional<double> score(ProgramTree const& t)
    {
        if (exhausted()) return std::nullopt;
        ++used_;
        return score_tree(t, matrix_);
    }

    // Higher accuracy wins; at equal accuracy the smaller tree does.
    static bool better(double s, ProgramTree const& t, double cur, ProgramTree const& cur_tree)
    {
        return s > cur || (s == cur && t.size() < cur_tree.size());
    }

    void notify() const
    {
        if (observer_) observer_(used_, best_score_);
    }

    // The most informative literal, or with an engine a uniform pick among
    // the dynamic_features most informative ones.
    ProgramTree initial_literal(std::optional<std::reference_wrapper<std::mt19937_64>> rng) const
    {
        auto const top = top_by_mi(matrix_, matrix_.target(), rng ? config_.dynamic_features : 1, {});
        std::size_t const f = top[rng ? draw(rng->get(), top.size()) : 0];
        bool const negated = 2 * count_equal(matrix_.column(f), matrix_.target()) < matrix_.rows();
        return ProgramTree::literal(f, negated);
    }

    std::vector<std::size_t> add_candidates(ProgramTree const& tree) const
    {
        auto feats = dynamic_select(tree, matrix_, config_.dynamic_features);
        for (std::size_t f : features_of(tree)) feats.push_back(f);
        return feats;
    }

    // The narrow neighbourhood: literal additions, extensions, removals,
    // flips, swaps and two-literal clauses. The wide one holds only
    // three-literal clauses, added under a connective or wrapped around it.
    Outcome hill_climb(ProgramTree& current, double& cur_score, bool wide)
    {
        std::vector<Path> conns;
        std::vector<Path> lits;
        Path p;
        collect_paths(current, p, conns, lits);

        std::vector<Move> moves;
        auto const feats = add_candidates(current);
        std::size_t const top = std::min(kClauseFeatures, feats.size());
        int const clause_size = wide ? 3 : 2;
        for (auto const& c : conns) {
            auto const& node = node_at(current, c);
            if (!wide) {
                for (std::size_t f : feats) {
                    for (bool neg : {false, true}) {
                        bool const dup = std::any_of(node.children().begin(), node.children().end(),
                                                     [&](ProgramTree const& k) {
                                                         return k.is_literal() && k.feature() == f && k.negated() == neg;
                                                     });
                        if (!dup) moves.push_back({Move::Type::Add, c, f, neg});
                    }
                }
                moves.push_back({Move::Type::Swap, c});
            }
            // every clause_size-subset of the top features, in all polarities
            for (std::uint32_t mask = 0; mask < (1u << top); ++mask) {
                if (std::popcount(mask) != clause_size) continue;
                for (std::uint32_t signs = 0; signs < (1u << clause_size); ++signs) {
                    Move m{Move::Type::AddClause, c};
                    m.kind = alternate(node.kind());
                    for (std::size_t a = 0; a < top; ++a) {
                        if (mask & (1u << a)) m.clause.emplace_back(feats[a], (signs >> m.clause.size()) & 1u);
                    }
                    moves.push_back(m);
                    if (wide) {
                        m.type = Move::Type::Wrap;
                        m.kind = node.kind();
                        moves.push_back(std::move(m));
                    }
                }
            }
        }
        if (!wide) {
            for (auto const& l : lits) {
                // A literal can also become a two-literal clause of the other
                // connective (either connective at the root).
                std::vector<ProgramTree::Kind> kinds;
                if (l.empty()) {
                    kinds = {ProgramTree::Kind::And, ProgramTree::Kind::Or};
                } else {
                    kinds = {alternate(node_at(current, Path(l.begin(), l.end() - 1)).kind())};
                }
                auto const& lit = node_at(current, l);
                for (auto k : kinds) {
                    for (std::size_t f : feats) {
                        for (bool neg : {false, true}) {
                            if (f == lit.feature() && neg == lit.negated()) continue;
                            moves.push_back({Move::Type::Extend, l, f, neg, k});
                        }
                    }
                }
                moves.push_back({Move::Type::Flip, l});
                if (!l.empty()) {
                    Path parent(l.begin(), l.end() - 1);
                    if (node_at(current, parent).children().size() > 1) moves.push_back({Move::Type::Remove, l});
                }
            }
        }
        shuffle(moves, rng_);

        for (auto const& m : moves) {
            ProgramTree cand = apply(current, m);
            if (cand == current || cand.depth() > config_.max_depth) continue;
            auto s = score(cand);
            if (!s) return Outcome::OutOfBudget;
            if (better(*s, cand, cur_score, current)) {
                current = std::move(cand);
                cur_score = *s;
                return Outcome::Improved;
            }
        }
        return Outcome::NoMove;
    }

    static ProgramTree apply(ProgramTree const& tree, Move const& m)
    {
        ProgramTree t = tree;
        switch (m.type) {
        case Move::Type::Add:
            node_at(t, m.path).children().push_back(ProgramTree::literal(m.feature, m.negated));
            break;
        case Move::Type::AddClause: {
            std::vector<ProgramTree> kids;
            for (auto const& [f, neg] : m.clause) kids.push_back(ProgramTree::literal(f, neg));
            node_at(t, m.path).children().push_back(connective(m.kind, std::move(kids)));
            break;
        }
        case Move::Type::Wrap: {
            std::vector<ProgramTree> kids;
            for (auto const& [f, neg] : m.clause) kids.push_back(ProgramTree::literal(f, neg));
            auto& n = node_at(t, m.path);
            n = connective(alternate(m.kind), {n, connective(m.kind, std::move(kids))});
            break;
        }
        case Move::Type::Extend: {
            auto& n = node_at(t, m.path);
            n = connective(m.kind, {n, ProgramTree::literal(m.feature, m.negated)});
            break;
        }
        case Move::Type::Remove: {
            Path parent(m.path.begin(), m.path.end() - 1);
            auto& kids = node_at(t, parent).children();
            kids.erase(kids.begin() + m.path.back());
            break;
        }
        case Move::Type::Flip: {
            auto& n = node_at(t, m.path);
            n.set_negated(!n.negated());
            break;
        }
        case Move::Type::Swap: {
            auto& n = node_at(t, m.path);
            n.set_kind(alternate(n.kind()));
            break;
        }
        }
        t.flatten();
        return t;
    }

    ProgramTree crossover(ProgramTree const& current)
    {
        std::vector<Path> conns, lits, all;
        Path p;
        collect_paths(epoch_best_, p, conns, lits, &all);
        ProgramTree const donor = node_at(epoch_best_, all[draw(rng_, all.size())]);

        std::vector<Path> cur_conns, cur_lits, cur_all;
        collect_paths(current, p, cur_conns, cur_lits, &cur_all);
        ProgramTree child = current;
        bool const replace = cur_all.size() > 1 && (cur_conns.empty() || draw(rng_, 2) == 0);
        if (replace) {
            node_at(child, cur_all[1 + draw(rng_, cur_all.size() - 1)]) = donor;
        } else if (!cur_conns.empty()) {
            node_at(child, cur_conns[draw(rng_, cur_conns.size())]).children().push_back(donor);
        }
        child.flatten();
        return child;
    }

    // Wraps `base` in the alternate connective beside a one-literal slot of
    // the other connective. Slot literals come from the features most
    // informative about the base's errors plus the base's own; the best
    // scoring wrap is returned.
    std::optional<std::pair<ProgramTree, double>> deepen(ProgramTree const& base)
    {
        BitVector const pred = base.evaluate(matrix_.columns(), matrix_.rows());
        BitVector const errors = pred ^ matrix_.target();
        std::size_t const missed = count_and(errors, matrix_.target());
        std::size_t const false_alarms = errors.count() - missed;

        ProgramTree::Kind wrap;
        if (base.is_literal()) {
            wrap = missed >= false_alarms ? ProgramTree::Kind::Or : ProgramTree::Kind::And;
        } else {
            wrap = alternate(base.kind());
        }
        ProgramTree::Kind const slot = alternate(wrap);

        auto feats = top_by_mi(matrix_, errors, std::min<std::size_t>(config_.dynamic_features, 4),
                               features_of(base));
        for (std::size_t f : features_of(base)) feats.push_back(f);

        struct Candidate {
            ProgramTree tree;
            double score;
            std::size_t feature;
            bool negated;
        };
        std::vector<Candidate> cands;
        for (std::size_t f : feats) {
            for (bool neg : {false, true}) {
                ProgramTree lit_slot = connective(slot, {ProgramTree::literal(f, neg)});
                ProgramTree t = connective(wrap, {base, lit_slot});
                if (t.depth() > config_.max_depth) {
                    if (base.is_literal()) continue;
                    t = base;
                    t.children().push_back(connective(alternate(base.kind()), {ProgramTree::literal(f, neg)}));
                }
                t.flatten();
                auto s = score(t);
                if (!s) break;
                cands.push_back({std::move(t), *s, f, neg});
            }
        }
        if (cands.empty()) return std::nullopt;
        std::stable_sort(cands.begin(), cands.end(), [](Candidate const& a, Candidate const& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.feature != b.feature) return a.feature < b.feature;
            return a.negated < b.negated;
        });
        auto& pick = cands.front();
        return std::make_pair(std::move(pick.tree), pick.score);
    }

    FeatureMatrix const& matrix_;
    TrainConfig const& config_;
    ProgressObserver const& observer_;
    std::mt19937_64 rng_;
    std::size_t used_ = 0;
    std::size_t epoch_start_ = 0;
    ProgramTree best_;
    double best_score_ = 0.0;
    // Best tree of the current epoch, the crossover donor.
    ProgramTree epoch_best_;
};

} // namespace

Representation train_representation(FeatureMatrix const& matrix, TrainConfig const& config,
                                    ProgressObserver const& observer)
{
    return Search(matrix, config, observer).run();
}

KeywordLists extract_keywords(std::span<Representation const> reps, std::span<FeatureId const> features)
{
    std::set<std::string> pos, neg;
    for (auto const& r : reps) {
        for (auto const* lit : r.tree.literals()) {
            auto const& term = features[lit->feature()].term;
            (lit->negated() ? neg : pos).insert(term);
        }
    }
    return {{pos.begin(), pos.end()}, {neg.begin(), neg.end()}};
}

} // namespace cohortsift

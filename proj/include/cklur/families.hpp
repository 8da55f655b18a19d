#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cklur/space.hpp"

namespace cklur {

// ── Isolated families ───────────────────────────────────────────────────────
//
// A family is a finite list of nonempty, pairwise disjoint sets each of which
// avoids the closure of the union of the others.  On sequence spaces a family
// may be *symbolic*: the family of singletons {n} for every n in `domain`,
// where the domain may include the infinite tail.  Symbolic families are never
// enumerated; all operations on them use closed forms.  Derived families are
// always explicit because boundary sets contain no tail points.

struct Family {
    bool symbolic = false;
    PointSet domain;                 // symbolic form: members are {n}, n in domain
    std::vector<PointSet> members;   // explicit form

    bool empty() const { return symbolic ? domain.empty() : members.empty(); }
    PointSet union_all() const;
};

// Explicit family; members must be nonempty subsets of the space.
Family make_explicit_family(const TopSpace& space, std::vector<PointSet> members);
// Family of singletons over `domain` (sequence spaces; the limit point is not
// allowed in the domain).  A finite domain is materialized to explicit form.
Family make_symbolic_family(const TopSpace& space, PointSet domain);

struct IsolationReport {
    bool isolated = true;
    int member_index = -1;  // offending member when not isolated
    PointSet witness;       // points of the member inside the closure of the others
};

IsolationReport check_isolated(const TopSpace& space, const Family& fam);

// Replace each member N by cl(N) minus cl(union of the others).  Members only
// grow; the result is a regular isolated family with the same closure data.
// Pre: fam is isolated (throws ValidationError otherwise).
Family regularize(const TopSpace& space, const Family& fam);

// Boundary set of a regular isolated family: closure of the union minus the
// union.  Computed two independent ways (set algebra, and the neighborhood
// characterization "every neighborhood meets two members"); disagreement is an
// internal error.
PointSet boundary_J(const TopSpace& space, const Family& fam);

// ── Index sequences and their well-order ────────────────────────────────────

struct IndexSeq {
    std::vector<int> entries;

    // Validates: nonempty, nonnegative, strictly increasing.
    static IndexSeq of(std::vector<int> entries);
    int size() const { return static_cast<int>(entries.size()); }
    int back() const { return entries.back(); }
    std::string to_string() const;
    bool operator==(const IndexSeq& o) const { return entries == o.entries; }
};

enum class Order { before, equal, after };

// Total order on index sequences: lexicographic with missing entries read as
// +infinity, so every proper extension precedes its prefix.
Order prec(const IndexSeq& a, const IndexSeq& b);
// The same order evaluated from its two defining clauses (first strict
// difference / proper extension).  Kept separate as a cross-check.
Order prec_by_clauses(const IndexSeq& a, const IndexSeq& b);

// ── Coverings ───────────────────────────────────────────────────────────────

// A validated covering at one metric level: finitely many regular isolated
// families whose members jointly cover the space, each member equipped with a
// witness set W with member ⊆ cl(W) and diam(W) ≤ 2^-level.
class LevelCovering {
public:
    const TopSpace& space() const { return *space_; }
    int level() const { return level_; }
    bool all_levels() const { return all_levels_; }
    int family_count() const { return static_cast<int>(families_.size()); }
    const std::vector<Family>& families() const { return families_; }
    const Family& family(int i) const { return families_[i]; }
    // Witnesses for the explicit members of family i (empty for symbolic
    // families, whose members are their own witnesses).
    const std::vector<PointSet>& witnesses(int i) const { return witnesses_[i]; }

private:
    friend LevelCovering build_covering(const TopSpace&, int, bool, std::vector<Family>,
                                        std::vector<std::vector<PointSet>>);
    const TopSpace* space_ = nullptr;
    int level_ = 0;
    bool all_levels_ = false;
    std::vector<Family> families_;
    std::vector<std::vector<PointSet>> witnesses_;
};

// Validates isolation, regularizes every family, and checks the covering and
// witness conditions.  `witnesses` may be empty (the pre-regularization
// members then serve as their own witnesses) or must match the family shapes.
// all_levels = true demands witness diameter 0 (valid at every level).
LevelCovering build_covering(const TopSpace& space, int level, bool all_levels,
                             std::vector<Family> families,
                             std::vector<std::vector<PointSet>> witnesses = {});

// ── Derived families ────────────────────────────────────────────────────────

struct DerivedEntry {
    Family fam;
    PointSet I;  // union of the members
    PointSet J;  // cl(I) minus I
};

// Memoized table of derived families over one covering.  The base families
// are the covering's; longer sequences intersect the next base family with
// the previous boundary set.  Indices beyond the family count yield empty
// families (so the table is total);
class DerivedTable {
public:
    explicit DerivedTable(const LevelCovering& cov);

    const TopSpace& space() const { return cov_->space(); }
    const LevelCovering& covering() const { return *cov_; }
    int family_count() const { return cov_->family_count(); }

    const DerivedEntry& derive(const IndexSeq& seq);
    // Debug path: arbitrary (possibly non-increasing) sequences; a repeated
    // index forces the empty family.
    const DerivedEntry& derive_raw(const std::vector<int>& seq);
    PointSet closure_of_I(const IndexSeq& seq);

    // All nonempty strictly increasing sequences over {0..max_index-1},
    // sorted by prec.  Cached.
    const std::vector<IndexSeq>& sigma_sorted(int max_index);
    const std::vector<IndexSeq>& sigma_sorted() { return sigma_sorted(family_count()); }

private:
    const LevelCovering* cov_;
    std::map<std::vector<int>, DerivedEntry> memo_;
    std::map<int, std::vector<IndexSeq>> sigma_cache_;
};

// Union of cl(I(i)) over all i strictly preceding j: evaluated by the closed
// formula (prefix variations plus the boundary of j) and verified against the
// brute-force union over the truncated sequence set; disagreement is an
// internal error.
PointSet union_closures_before(DerivedTable& table, const IndexSeq& j);
PointSet union_closures_before_brute(DerivedTable& table, const IndexSeq& j);

// The open set G(j, M): complement of (everything preceding j) and of the
// closure of the discarded members of the derived family at j.  M must be a
// sublist of that family's members.
PointSet open_G(DerivedTable& table, const IndexSeq& j, const std::vector<PointSet>& M);

struct MinimalIndexResult {
    IndexSeq j;
    std::vector<PointSet> M;  // the members of the derived family at j meeting H
};

// For closed nonempty H: the prec-least j whose derived closure meets H,
// together with the (finite, unique) member set meeting H.  Postconditions
// (H ∩ cl I(j) ⊆ I(j), and H ⊆ G(j, M)) are asserted.
MinimalIndexResult minimal_index(DerivedTable& table, PointSet H);

}  // namespace cklur

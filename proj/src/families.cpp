#include "cklur/families.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

#include "cklur/errors.hpp"

namespace cklur {

// ── Families ────────────────────────────────────────────────────────────────

PointSet Family::union_all() const {
    if (symbolic) return domain;
    PointSet u;
    for (const PointSet& m : members) u = u.unite(m);
    return u;
}

Family make_explicit_family(const TopSpace& space, std::vector<PointSet> members) {
    for (const PointSet& m : members) {
        if (m.empty()) throw ValidationError("family member must be nonempty");
        if (!m.subset_of(space.universe()))
            throw ValidationError("family member is not a subset of the space");
    }
    Family f;
    f.symbolic = false;
    f.members = std::move(members);
    return f;
}

Family make_symbolic_family(const TopSpace& space, PointSet domain) {
    if (space.kind() != SpaceKind::sequence)
        throw ValidationError("singleton families over a domain require a sequence space");
    if (!domain.subset_of(space.universe()))
        throw ValidationError("family domain is not a subset of the space");
    if (domain.contains(space.limit_id()))
        throw ValidationError("the limit point is not isolated and cannot join a singleton family");
    if (domain.tail == Tail::none) {
        // Finite domain: materialize the singletons.
        std::vector<PointSet> members;
        for_each_explicit(domain, [&](int id) { members.push_back(PointSet::single(id)); });
        return make_explicit_family(space, std::move(members));
    }
    Family f;
    f.symbolic = true;
    f.domain = domain;
    return f;
}

IsolationReport check_isolated(const TopSpace& space, const Family& fam) {
    IsolationReport rep;
    if (fam.symbolic) {
        // Members are singletons of isolated points; the closure of any
        // subfamily adds at most the limit point, which the domain excludes.
        if (fam.domain.contains(space.limit_id()) &&
            fam.domain.minus(PointSet::single(space.limit_id())).infinite()) {
            rep.isolated = false;
            rep.member_index = -1;
            rep.witness = PointSet::single(space.limit_id());
        }
        return rep;
    }
    const int n = static_cast<int>(fam.members.size());
    for (int k = 0; k < n; ++k) {
        PointSet others;
        for (int j = 0; j < n; ++j)
            if (j != k) others = others.unite(fam.members[j]);
        PointSet overlap = fam.members[k].intersect(space.closure(others));
        if (!overlap.empty()) {
            rep.isolated = false;
            rep.member_index = k;
            rep.witness = overlap;
            return rep;
        }
    }
    return rep;
}

Family regularize(const TopSpace& space, const Family& fam) {
    IsolationReport rep = check_isolated(space, fam);
    if (!rep.isolated)
        throw ValidationError("cannot regularize: family is not isolated (member " +
                              std::to_string(rep.member_index) + " meets " +
                              space.set_to_string(rep.witness) + ")");
    if (fam.symbolic) return fam;  // singletons of isolated points are already regular
    const int n = static_cast<int>(fam.members.size());
    Family out;
    out.symbolic = false;
    out.members.reserve(n);
    for (int k = 0; k < n; ++k) {
        PointSet others;
        for (int j = 0; j < n; ++j)
            if (j != k) others = others.unite(fam.members[j]);
        out.members.push_back(space.closure(fam.members[k]).minus(space.closure(others)));
    }
    return out;
}

PointSet boundary_J(const TopSpace& space, const Family& fam) {
    {
        IsolationReport rep = check_isolated(space, fam);
        if (!rep.isolated) throw ValidationError("boundary requires an isolated family");
        if (!fam.symbolic) {
            Family reg = regularize(space, fam);
            for (std::size_t k = 0; k < fam.members.size(); ++k)
                if (reg.members[k] != fam.members[k])
                    throw ValidationError("boundary requires a regular family (member " +
                                          std::to_string(k) + " is not regular)");
        }
    }
    PointSet I = fam.union_all();
    PointSet j1 = space.closure(I).minus(I);

    // Independent route: a point lies on the boundary exactly when its minimal
    // neighborhood meets at least two members.
    PointSet j2;
    for (int t = 0; t < space.explicit_points(); ++t) {
        PointSet nb = space.min_nbhd(t);
        int count = 0;
        if (fam.symbolic) {
            PointSet hit = nb.intersect(fam.domain);
            count = hit.infinite() ? 2 : hit.explicit_count();
        } else {
            for (const PointSet& m : fam.members) {
                if (nb.intersects(m)) ++count;
                if (count >= 2) break;
            }
        }
        if (count >= 2) j2.bits |= std::uint64_t{1} << t;
    }
    if (j1 != j2)
        throw InternalError("boundary routes disagree: " + space.set_to_string(j1) + " vs " +
                            space.set_to_string(j2));
    return j1;
}

// ── Index sequences ─────────────────────────────────────────────────────────

IndexSeq IndexSeq::of(std::vector<int> entries) {
    if (entries.empty()) throw ValidationError("index sequence must be nonempty");
    for (std::size_t s = 0; s < entries.size(); ++s) {
        if (entries[s] < 0) throw ValidationError("index sequence entries must be nonnegative");
        if (s > 0 && entries[s] <= entries[s - 1])
            throw ValidationError("index sequence must be strictly increasing");
    }
    IndexSeq seq;
    seq.entries = std::move(entries);
    return seq;
}

std::string IndexSeq::to_string() const {
    std::string out = "(";
    for (std::size_t s = 0; s < entries.size(); ++s) {
        if (s) out += ",";
        out += std::to_string(entries[s]);
    }
    out += ")";
    return out;
}

Order prec(const IndexSeq& a, const IndexSeq& b) {
    const std::size_t la = a.entries.size(), lb = b.entries.size();
    const std::size_t m = std::max(la, lb);
    for (std::size_t s = 0; s < m; ++s) {
        int av = s < la ? a.entries[s] : INT_MAX;
        int bv = s < lb ? b.entries[s] : INT_MAX;
        if (av != bv) return av < bv ? Order::before : Order::after;
    }
    return Order::equal;
}

Order prec_by_clauses(const IndexSeq& a, const IndexSeq& b) {
    const std::size_t la = a.entries.size(), lb = b.entries.size();
    const std::size_t m = std::min(la, lb);
    for (std::size_t s = 0; s < m; ++s)
        if (a.entries[s] != b.entries[s])  // clause (1): first strict difference
            return a.entries[s] < b.entries[s] ? Order::before : Order::after;
    if (la == lb) return Order::equal;
    return la > lb ? Order::before : Order::after;  // clause (2): extensions come first
}

// ── Coverings ───────────────────────────────────────────────────────────────

LevelCovering build_covering(const TopSpace& space, int level, bool all_levels,
                             std::vector<Family> families,
                             std::vector<std::vector<PointSet>> witnesses) {
    if (families.empty()) throw ValidationError("covering needs at least one family");
    if (!all_levels && level < 0) throw ValidationError("covering level must be nonnegative");
    if (!all_levels && level > 64) throw ValidationError("covering level is limited to 64");

    const bool have_witnesses = !witnesses.empty();
    if (have_witnesses && witnesses.size() != families.size())
        throw ValidationError("witness list must match the family list");

    LevelCovering cov;
    cov.space_ = &space;
    cov.level_ = all_levels ? 0 : level;
    cov.all_levels_ = all_levels;
    cov.witnesses_.resize(families.size());

    for (std::size_t i = 0; i < families.size(); ++i) {
        IsolationReport rep = check_isolated(space, families[i]);
        if (!rep.isolated)
            throw ValidationError("family " + std::to_string(i) + " is not isolated: member " +
                                  std::to_string(rep.member_index) + " meets the closure of the "
                                  "others at " + space.set_to_string(rep.witness));
        if (families[i].symbolic) {
            if (have_witnesses && !witnesses[i].empty())
                throw ValidationError("singleton families carry no explicit witnesses");
            cov.families_.push_back(families[i]);
            continue;
        }
        // Default witness: the member as given, before regularization.  The
        // regularized member stays inside the closure of the original.
        std::vector<PointSet> w;
        if (have_witnesses && !witnesses[i].empty()) {
            if (witnesses[i].size() != families[i].members.size())
                throw ValidationError("family " + std::to_string(i) +
                                      " needs one witness per member");
            w = witnesses[i];
        } else {
            w = families[i].members;
        }
        Family reg = regularize(space, families[i]);
        const double bound = all_levels ? 0.0 : std::ldexp(1.0, -level);
        for (std::size_t k = 0; k < reg.members.size(); ++k) {
            if (!reg.members[k].subset_of(space.closure(w[k])))
                throw ValidationError("witness for member " + std::to_string(k) + " of family " +
                                      std::to_string(i) + " does not reach the member: " +
                                      space.set_to_string(reg.members[k]) + " is not inside cl " +
                                      space.set_to_string(w[k]));
            double d = space.diameter(w[k]);
            if (d > bound)
                throw ValidationError("witness " + space.set_to_string(w[k]) + " for member " +
                                      std::to_string(k) + " of family " + std::to_string(i) +
                                      " has diameter " + std::to_string(d) +
                                      " above the level bound " + std::to_string(bound));
        }
        cov.witnesses_[i] = std::move(w);
        cov.families_.push_back(std::move(reg));
    }

    PointSet covered;
    for (const Family& f : cov.families_) covered = covered.unite(f.union_all());
    if (covered != space.universe()) {
        std::string miss = space.set_to_string(space.universe().minus(covered));
        throw ValidationError("families do not cover the space; missing " + miss +
                              "; uncovered: " + miss.substr(1, miss.size() - 2));
    }
    return cov;
}

// ── Derived families ────────────────────────────────────────────────────────

DerivedTable::DerivedTable(const LevelCovering& cov) : cov_(&cov) {}

const DerivedEntry& DerivedTable::derive_raw(const std::vector<int>& seq) {
    auto it = memo_.find(seq);
    if (it != memo_.end()) return it->second;

    const TopSpace& sp = space();
    DerivedEntry entry;
    if (seq.empty()) throw ValidationError("index sequence must be nonempty");
    if (seq.size() == 1) {
        if (seq[0] >= 0 && seq[0] < family_count()) {
            entry.fam = cov_->family(seq[0]);
            entry.I = entry.fam.union_all();
            entry.J = boundary_J(sp, entry.fam);
        }
        // out-of-range index: empty family by convention
    } else {
        std::vector<int> prefix(seq.begin(), seq.end() - 1);
        const DerivedEntry& parent = derive_raw(prefix);
        const int next = seq.back();
        if (next >= 0 && next < family_count()) {
            const Family& base = cov_->family(next);
            if (base.symbolic) {
                // Boundary sets contain no tail points, so the intersection is
                // a finite set of heads: the result is explicit.
                PointSet hits = base.domain.intersect(parent.J);
                for_each_explicit(hits, [&](int id) {
                    entry.fam.members.push_back(PointSet::single(id));
                });
            } else {
                for (const PointSet& m : base.members) {
                    PointSet cut = m.intersect(parent.J);
                    if (!cut.empty()) entry.fam.members.push_back(cut);
                }
            }
        }
        entry.I = entry.fam.union_all();
        entry.J = sp.closure(entry.I).minus(entry.I);
    }
    return memo_.emplace(seq, std::move(entry)).first->second;
}

const DerivedEntry& DerivedTable::derive(const IndexSeq& seq) { return derive_raw(seq.entries); }

PointSet DerivedTable::closure_of_I(const IndexSeq& seq) {
    const DerivedEntry& e = derive(seq);
    return e.I.unite(e.J);
}

const std::vector<IndexSeq>& DerivedTable::sigma_sorted(int max_index) {
    auto it = sigma_cache_.find(max_index);
    if (it != sigma_cache_.end()) return it->second;
    if (max_index < 0 || max_index > 16)
        throw ValidationError("index range for sequence enumeration is limited to 16");
    std::vector<IndexSeq> seqs;
    for (std::uint32_t mask = 1; mask < (1u << max_index); ++mask) {
        std::vector<int> entries;
        for (int b = 0; b < max_index; ++b)
            if ((mask >> b) & 1u) entries.push_back(b);
        seqs.push_back(IndexSeq::of(std::move(entries)));
    }
    std::sort(seqs.begin(), seqs.end(),
              [](const IndexSeq& a, const IndexSeq& b) { return prec(a, b) == Order::before; });
    return sigma_cache_.emplace(max_index, std::move(seqs)).first->second;
}

PointSet union_closures_before_brute(DerivedTable& table, const IndexSeq& j) {
    PointSet out;
    for (const IndexSeq& s : table.sigma_sorted())
        if (prec(s, j) == Order::before) out = out.unite(table.closure_of_I(s));
    return out;
}

PointSet union_closures_before(DerivedTable& table, const IndexSeq& j) {
    // Closed formula: prefix variations with a smaller entry spliced in, plus
    // the boundary set of j itself (which absorbs every proper extension).
    PointSet a1;
    for (int r = 0; r < j.size(); ++r) {
        const int lo = r == 0 ? -1 : j.entries[r - 1];
        const int hi = j.entries[r];
        for (int i = lo + 1; i < hi; ++i) {
            std::vector<int> entries(j.entries.begin(), j.entries.begin() + r);
            entries.push_back(i);
            a1 = a1.unite(table.closure_of_I(IndexSeq::of(std::move(entries))));
        }
    }
    PointSet formula = a1.unite(table.derive(j).J);
    PointSet brute = union_closures_before_brute(table, j);
    if (formula != brute)
        throw InternalError("preceding-closure routes disagree at " + j.to_string() + ": " +
                            table.space().set_to_string(formula) + " vs " +
                            table.space().set_to_string(brute));
    return formula;
}

PointSet open_G(DerivedTable& table, const IndexSeq& j, const std::vector<PointSet>& M) {
    const TopSpace& sp = table.space();
    const DerivedEntry& entry = table.derive(j);

    PointSet rest;
    if (entry.fam.symbolic) {
        PointSet picked;
        for (const PointSet& m : M) {
            if (m.infinite() || m.explicit_count() != 1 || !m.subset_of(entry.fam.domain))
                throw ValidationError("selected member " + sp.set_to_string(m) +
                                      " is not a member of the derived family at " + j.to_string());
            if (picked.intersects(m))
                throw ValidationError("selected members must be distinct");
            picked = picked.unite(m);
        }
        rest = entry.fam.domain.minus(picked);
    } else {
        std::vector<bool> used(entry.fam.members.size(), false);
        for (const PointSet& m : M) {
            bool found = false;
            for (std::size_t k = 0; k < entry.fam.members.size(); ++k) {
                if (!used[k] && entry.fam.members[k] == m) {
                    used[k] = true;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw ValidationError("selected member " + sp.set_to_string(m) +
                                      " is not a member of the derived family at " + j.to_string());
        }
        for (std::size_t k = 0; k < entry.fam.members.size(); ++k)
            if (!used[k]) rest = rest.unite(entry.fam.members[k]);
    }

    PointSet g = sp.universe()
                     .minus(union_closures_before(table, j))
                     .minus(sp.closure(rest));
    if (!sp.is_open(g))
        throw InternalError("derived set G" + j.to_string() + " is not open: " +
                            sp.set_to_string(g));
    return g;
}

MinimalIndexResult minimal_index(DerivedTable& table, PointSet H) {
    const TopSpace& sp = table.space();
    if (H.empty()) throw ValidationError("minimal index requires a nonempty set");
    if (!sp.is_closed(H))
        throw ValidationError("minimal index requires a closed set; got " + sp.set_to_string(H));

    for (const IndexSeq& j : table.sigma_sorted()) {
        PointSet cl = table.closure_of_I(j);
        if (!cl.intersects(H)) continue;

        const DerivedEntry& entry = table.derive(j);
        std::vector<PointSet> M;
        if (entry.fam.symbolic) {
            PointSet hits = entry.fam.domain.intersect(H);
            if (hits.infinite())
                throw InternalError("infinitely many members meet H at the minimal index " +
                                    j.to_string() + "; the set " + sp.set_to_string(H) +
                                    " cannot be closed");
            for_each_explicit(hits, [&](int id) { M.push_back(PointSet::single(id)); });
        } else {
            for (const PointSet& m : entry.fam.members)
                if (m.intersects(H)) M.push_back(m);
        }

        if (!cl.intersect(H).subset_of(entry.I))
            throw InternalError("minimal index " + j.to_string() +
                                " violates the interior property: cl I meets H outside I");
        PointSet g = open_G(table, j, M);
        if (!H.subset_of(g))
            throw InternalError("minimal index " + j.to_string() + ": H is not inside G, lost " +
                                sp.set_to_string(H.minus(g)));
        return {j, std::move(M)};
    }
    throw InternalError("no index sequence reaches " + sp.set_to_string(H) +
                        "; the covering cannot cover the space");
}

}  // namespace cklur

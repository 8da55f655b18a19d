#include "cklur/norm.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "cklur/errors.hpp"

namespace cklur {

// ── Parameters and weights ──────────────────────────────────────────────────

void NormParams::validate() const {
    if (l_max < 1 || l_max > 40) throw ValidationError("l_max must be in 1..40");
    if (i_max < 1 || i_max > 9) throw ValidationError("i_max must be in 1..9");
    if (mn_max < 1 || mn_max > 8) throw ValidationError("mn_max must be in 1..8");
    if (p_max < 1 || p_max > 40) throw ValidationError("p_max must be in 1..40");
    if (!(fp_tol > 0.0) || !(fp_tol <= 1.0)) throw ValidationError("fp_tol must be in (0,1]");
    if (!(strict_tol > 0.0) || !(strict_tol <= 1.0))
        throw ValidationError("strict_tol must be in (0,1]");
    if (max_sweeps < 1) throw ValidationError("max_sweeps must be positive");
    if (!weight_override.empty()) {
        double sum = 0.0;
        for (const auto& [key, w] : weight_override) {
            IndexSeq::of(key);  // shape check: nonempty, strictly increasing
            if (!std::isfinite(w) || w <= 0.0)
                throw ValidationError("weights must be positive and finite");
            sum += w;
        }
        if (sum > 1.0 + 1e-12) throw ValidationError("weights must sum to at most 1");
    }
}

double default_weight(const IndexSeq& seq) {
    long long e = 0;
    for (int v : seq.entries) e += 1LL << v;
    if (e > 1073) throw ValidationError("index sequence too deep for a representable weight");
    return std::ldexp(1.0, static_cast<int>(-e));
}

double weight_of(const NormParams& params, const IndexSeq& seq) {
    if (params.weight_override.empty()) return default_weight(seq);
    auto it = params.weight_override.find(seq.entries);
    // Sequences outside the supplied table carry weight zero: the override is
    // an exact finitely-supported reweighting.
    return it == params.weight_override.end() ? 0.0 : it->second;
}

// ── Elementary pieces ───────────────────────────────────────────────────────

double phi_gap(const TopSpace& space, const RealFunction& f, PointSet L,
               const std::vector<PointSet>& Mside, const std::vector<PointSet>& Nside) {
    validate_function(space, f);
    if (Mside.empty() || Nside.empty())
        throw ValidationError("phi needs at least one set on each side");
    for (const PointSet& N : Nside)
        if (!space.closure(N).intersects(L))
            throw ValidationError("a max-side set misses the evaluation set");
    for (const PointSet& M : Mside)
        if (!space.closure(M).intersects(L))
            throw ValidationError("a min-side set misses the evaluation set");
    double sn = 0.0;
    for (const PointSet& N : Nside) sn += max_over(space, f, space.closure(N).intersect(L));
    double sm = 0.0;
    for (const PointSet& M : Mside) sm += min_over(space, f, space.closure(M).intersect(L));
    double u = sn / static_cast<double>(Nside.size());
    double v = sm / static_cast<double>(Mside.size());
    double d = u - v;
    return d > 0.0 ? 0.5 * d : 0.0;
}

namespace {

// Members of the derived family at `seq` that meet L, in canonical order.
// A symbolic family is materialized only over its intersection with L.
std::vector<PointSet> members_meeting(DerivedTable& table, const IndexSeq& seq, PointSet L) {
    const DerivedEntry& de = table.derive(seq);
    std::vector<PointSet> out;
    if (de.fam.symbolic) {
        PointSet hits = de.fam.domain.intersect(L);
        if (hits.infinite())
            throw UnsupportedError("infinitely many family members meet the set");
        for_each_explicit(hits, [&](int id) { out.push_back(PointSet::single(id)); });
        return out;
    }
    for (const PointSet& m : de.fam.members)
        if (m.intersects(L)) out.push_back(m);
    return out;
}

// Advance a strictly increasing index combination over {0..cnt-1}.
bool next_comb(std::vector<int>& idx, int cnt) {
    int k = static_cast<int>(idx.size());
    for (int pos = k - 1; pos >= 0; --pos) {
        if (idx[pos] < cnt - (k - pos)) {
            ++idx[pos];
            for (int q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<BPair> enumerate_B(DerivedTable& table, PointSet L, int m, int n,
                               const IndexSeq& i, const IndexSeq& j) {
    if (m < 1 || n < 1) throw ValidationError("pair counts must be at least 1");
    const TopSpace& sp = table.space();
    std::vector<PointSet> mi = members_meeting(table, i, L);
    std::vector<PointSet> mj = members_meeting(table, j, L);
    std::vector<BPair> out;
    if (static_cast<int>(mi.size()) < m || static_cast<int>(mj.size()) < n) return out;

    std::vector<PointSet> cli, clj;
    cli.reserve(mi.size());
    clj.reserve(mj.size());
    for (const PointSet& s : mi) cli.push_back(sp.closure(s));
    for (const PointSet& s : mj) clj.push_back(sp.closure(s));

    std::vector<int> mc(m), nc(n);
    for (int q = 0; q < m; ++q) mc[q] = q;
    do {
        PointSet um;
        for (int q : mc) um = um.unite(cli[q]);
        for (int q = 0; q < n; ++q) nc[q] = q;
        do {
            PointSet un;
            for (int q : nc) un = un.unite(clj[q]);
            if (!um.intersects(un)) {
                BPair bp;
                for (int q : mc) bp.M.push_back(mi[q]);
                for (int q : nc) bp.N.push_back(mj[q]);
                out.push_back(std::move(bp));
            }
        } while (next_comb(nc, static_cast<int>(mj.size())));
    } while (next_comb(mc, static_cast<int>(mi.size())));
    return out;
}

Separators separators(const TopSpace& space, const std::vector<PointSet>& Mside,
                      const std::vector<PointSet>& Nside) {
    if (Mside.empty() || Nside.empty())
        throw ValidationError("separators need at least one set on each side");
    PointSet um, un;
    for (const PointSet& s : Mside) um = um.unite(s);
    for (const PointSet& s : Nside) un = un.unite(s);
    if (space.closure(um).intersects(space.closure(un)))
        throw ValidationError("the selected unions do not have disjoint closures");
    PointSet v = space.minimal_open_superset(space.closure(un));
    PointSet w = space.minimal_open_superset(space.closure(um));
    if (v.intersects(w))
        throw UnsupportedError("no disjoint open separation of the selected unions");
    Separators out;
    out.X = space.complement(v);
    out.Y = space.complement(w);
    if (!(out.X.unite(out.Y) == space.universe()))
        throw InternalError("separators fail to cover the space");
    if (out.X.intersects(un) || out.Y.intersects(um))
        throw InternalError("separator touches the union it must avoid");
    return out;
}

// ── Node scan (shared by the skeleton build and on-demand extension) ────────

namespace {

struct ScanResult {
    std::vector<TypeEntry> types;  // slots hold node-local pair ids
    std::vector<PairSlot> pairs;
};

ScanResult scan_node(const TopSpace& sp, DerivedTable& table, const std::vector<IndexSeq>& seqs,
                     const std::vector<double>& weights, const NormParams& pr,
                     std::uint64_t lmask) {
    ScanResult out;
    PointSet L{lmask, Tail::none};
    if (L.empty()) return out;
    int R = static_cast<int>(seqs.size());
    std::map<std::pair<std::vector<PointSet>, std::vector<PointSet>>, int> slot_ids;
    std::map<std::tuple<int, int, int, int>, int> type_ids;

    for (int ir = 0; ir < R; ++ir) {
        if (weights[ir] <= 0.0) continue;
        for (int jr = 0; jr < R; ++jr) {
            if (weights[jr] <= 0.0) continue;
            for (int m = 1; m <= pr.mn_max; ++m) {
                for (int n = 1; n <= pr.mn_max; ++n) {
                    std::vector<BPair> pairs = enumerate_B(table, L, m, n, seqs[ir], seqs[jr]);
                    if (pairs.empty()) continue;
                    TypeEntry t;
                    t.i_rank = ir;
                    t.j_rank = jr;
                    t.m = m;
                    t.n = n;
                    t.coef = (weights[ir] * weights[jr]) * std::ldexp(1.0, -(m + n));
                    for (BPair& bp : pairs) {
                        auto key = std::make_pair(bp.M, bp.N);
                        auto it = slot_ids.find(key);
                        int sid;
                        if (it != slot_ids.end()) {
                            sid = it->second;
                        } else {
                            PairSlot sl;
                            Separators sep = separators(sp, bp.M, bp.N);
                            sl.x_mask = sep.X.bits;
                            sl.y_mask = sep.Y.bits;
                            for (const PointSet& s : bp.M) sl.mcl.push_back(sp.closure(s).bits);
                            for (const PointSet& s : bp.N) sl.ncl.push_back(sp.closure(s).bits);
                            sl.M = std::move(bp.M);
                            sl.N = std::move(bp.N);
                            sid = static_cast<int>(out.pairs.size());
                            out.pairs.push_back(std::move(sl));
                            slot_ids.emplace(std::move(key), sid);
                        }
                        t.slots.push_back(sid);
                    }
                    type_ids[{ir, jr, m, n}] = static_cast<int>(out.types.size());
                    out.types.push_back(std::move(t));
                }
            }
        }
    }
    for (TypeEntry& t : out.types) {
        auto it = type_ids.find({t.j_rank, t.i_rank, t.n, t.m});
        if (it == type_ids.end())
            throw InternalError("candidate pair table is not swap-closed");
        t.swap_partner = it->second;
    }
    return out;
}

// Kernel pieces shared by the sweep and the on-demand extension.  The grouped
// accumulation adds each (type, swapped type) contribution as one term, so the
// total is bit-identical when the two sides of every pair are exchanged.
template <class F>
double grouped_theta_sum(const std::vector<TypeEntry>& types, F&& theta_sq_of) {
    double tsum = 0.0;
    for (int ti = 0; ti < static_cast<int>(types.size()); ++ti) {
        const TypeEntry& t = types[ti];
        if (t.swap_partner < ti) continue;
        double x = t.coef * theta_sq_of(t);
        if (t.swap_partner == ti) {
            tsum += x;
        } else {
            const TypeEntry& u = types[t.swap_partner];
            double y = u.coef * theta_sq_of(u);
            double g = x + y;
            tsum += g;
        }
    }
    return tsum;
}

template <class PhiAt, class PsiAt>
double type_theta_sq(const TypeEntry& t, int p_max, PhiAt&& phi_at, PsiAt&& psi_at) {
    double acc = 0.0;
    for (int p = 1; p <= p_max; ++p) {
        double best = 0.0;
        bool first = true;
        for (int sid : t.slots) {
            double ph = phi_at(sid);
            double v = 0.5 * (ph * ph + psi_at(sid) / p);
            if (first || v > best) {
                best = v;
                first = false;
            }
        }
        acc += std::ldexp(best, -p);
    }
    return acc;
}

double max_over_mask(const RealFunction& f, std::uint64_t mask) {
    double best = 0.0;
    bool first = true;
    std::uint64_t b = mask;
    while (b) {
        int id = __builtin_ctzll(b);
        b &= b - 1;
        double v = f.values[id];
        if (first || v > best) {
            best = v;
            first = false;
        }
    }
    if (first) throw InternalError("extremum over an empty mask");
    return best;
}

double min_over_mask(const RealFunction& f, std::uint64_t mask) {
    double best = 0.0;
    bool first = true;
    std::uint64_t b = mask;
    while (b) {
        int id = __builtin_ctzll(b);
        b &= b - 1;
        double v = f.values[id];
        if (first || v < best) {
            best = v;
            first = false;
        }
    }
    if (first) throw InternalError("extremum over an empty mask");
    return best;
}

// Same operation order as phi_gap, on precomputed closure masks.
double phi_from_masks(const RealFunction& f, std::uint64_t lmask, const PairSlot& sl) {
    double sn = 0.0;
    for (std::uint64_t cm : sl.ncl) sn += max_over_mask(f, cm & lmask);
    double sm = 0.0;
    for (std::uint64_t cm : sl.mcl) sm += min_over_mask(f, cm & lmask);
    double u = sn / static_cast<double>(sl.ncl.size());
    double v = sm / static_cast<double>(sl.mcl.size());
    double d = u - v;
    return d > 0.0 ? 0.5 * d : 0.0;
}

void require_discrete(const TopSpace& space) {
    if (space.kind() != SpaceKind::finite || !space.discrete())
        throw UnsupportedError("the norm layer needs a finite discrete space");
}

}  // namespace

// ── Skeleton ────────────────────────────────────────────────────────────────

Skeleton::Skeleton(const LevelCovering& cov, const NormParams& params)
    : cov_(&cov), params_(params), table_(cov) {
    params_.validate();
    require_discrete(cov.space());

    seqs_ = table_.sigma_sorted(params_.i_max);
    weights_.reserve(seqs_.size());
    for (const IndexSeq& s : seqs_) weights_.push_back(weight_of(params_, s));

    // Truncation bookkeeping: is any candidate type discarded, and how much
    // coefficient mass do the full and kept sums carry.
    int nfam = cov.family_count();
    auto count_of = [&](const IndexSeq& s) -> long long {
        const DerivedEntry& de = table_.derive(s);
        if (de.fam.symbolic)
            return de.fam.domain.infinite() ? -1 : de.fam.domain.explicit_count();
        return static_cast<long long>(de.fam.members.size());
    };
    double kept_sum = 0.0;
    for (std::size_t r = 0; r < seqs_.size(); ++r) {
        long long cnt = count_of(seqs_[r]);
        if (cnt < 0 || cnt > params_.mn_max) dropped_ = true;
        int capped = static_cast<int>(std::min<long long>(cnt < 0 ? params_.mn_max : cnt,
                                                          params_.mn_max));
        kept_sum += weights_[r] * (1.0 - std::ldexp(1.0, -capped));
    }
    mass_kept_ = kept_sum * kept_sum;
    if (!params_.weight_override.empty()) {
        // Finitely supported weights: nothing lives outside the truncated list.
        mass_full_ = mass_kept_;
        for (std::size_t r = 0; r < seqs_.size(); ++r) {
            long long cnt = count_of(seqs_[r]);
            if (weights_[r] > 0.0 && (cnt < 0 || cnt > params_.mn_max)) dropped_ = true;
        }
        if (dropped_) {
            double full_sum = 0.0;
            for (std::size_t r = 0; r < seqs_.size(); ++r) {
                long long cnt = count_of(seqs_[r]);
                double a = cnt < 0 ? 1.0 : 1.0 - std::ldexp(1.0, -static_cast<int>(std::min<long long>(cnt, 60)));
                full_sum += weights_[r] * a;
            }
            mass_full_ = full_sum * full_sum;
        }
    } else if (nfam <= 12) {
        double full_sum = 0.0;
        for (const IndexSeq& s : table_.sigma_sorted(nfam)) {
            long long cnt = count_of(s);
            bool in_trunc = s.back() < params_.i_max;
            if (!in_trunc && cnt != 0) dropped_ = true;
            double a = cnt < 0 ? 1.0 : 1.0 - std::ldexp(1.0, -static_cast<int>(std::min<long long>(cnt, 60)));
            full_sum += default_weight(s) * a;
        }
        mass_full_ = full_sum * full_sum;
    } else {
        dropped_ = true;
        mass_full_ = 1.0;  // the built-in weights sum to exactly 1
    }

    // Breadth-first closure of the reachable sets, starting from the space.
    // Nodes appended by children while the loop runs are processed in turn.
    ensure_node(cov.space().universe().bits);
    for (std::size_t id = 0; id < nodes_.size(); ++id)
        build_node_types(static_cast<int>(id));
}

int Skeleton::node_of_mask(std::uint64_t mask) const {
    auto it = node_index_.find(mask);
    return it == node_index_.end() ? -1 : it->second;
}

int Skeleton::ensure_node(std::uint64_t mask) {
    auto it = node_index_.find(mask);
    if (it != node_index_.end()) return it->second;
    int id = static_cast<int>(nodes_.size());
    SkeletonNode nd;
    nd.mask = mask;
    nodes_.push_back(std::move(nd));
    node_index_.emplace(mask, id);
    return id;
}

void Skeleton::build_node_types(int id) {
    std::uint64_t lmask = nodes_[id].mask;
    ScanResult sc = scan_node(cov_->space(), table_, seqs_, weights_, params_, lmask);
    int base = static_cast<int>(slots_.size());
    for (PairSlot& sl : sc.pairs) {
        std::uint64_t cx = lmask & sl.x_mask;
        std::uint64_t cy = lmask & sl.y_mask;
        if (cx == lmask || cy == lmask)
            throw InternalError("separator child failed to shrink");
        sl.child_x = ensure_node(cx);
        sl.child_y = ensure_node(cy);
        slots_.push_back(std::move(sl));
    }
    for (TypeEntry& t : sc.types)
        for (int& sid : t.slots) sid += base;
    SkeletonNode& nd = nodes_[id];
    nd.slot_begin = base;
    nd.slot_end = static_cast<int>(slots_.size());
    nd.types = std::move(sc.types);
}

// ── Solve session ───────────────────────────────────────────────────────────

SolveSession::SolveSession(std::shared_ptr<const Skeleton> skel, RealFunction f, InitMode init)
    : skel_(std::move(skel)), f_(std::move(f)) {
    const TopSpace& sp = skel_->space();
    validate_function(sp, f_);
    int n = skel_->node_count();
    fsup_.resize(n);
    fosc_.resize(n);
    for (int id = 0; id < n; ++id) {
        PointSet L{skel_->node(id).mask, Tail::none};
        fsup_[id] = sup_abs_over(sp, f_, L);
        fosc_[id] = osc_over(sp, f_, L);
    }
    fsup_full_ = fsup_[0];
    int s = skel_->slot_count();
    phi_.resize(s);
    for (int id = 0; id < n; ++id) {
        const SkeletonNode& nd = skel_->node(id);
        for (int sid = nd.slot_begin; sid < nd.slot_end; ++sid)
            phi_[sid] = phi_from_masks(f_, nd.mask, skel_->slot(sid));
    }
    omega_sq_.assign(n, 0.0);
    psi_sq_.assign(s, 0.0);
    if (init == InitMode::sup) {
        for (int id = 0; id < n; ++id) omega_sq_[id] = fsup_[id] * fsup_[id];
        for (int id = 0; id < n; ++id) {
            const SkeletonNode& nd = skel_->node(id);
            for (int sid = nd.slot_begin; sid < nd.slot_end; ++sid)
                psi_sq_[sid] = fsup_[id] * fsup_[id];
        }
    }
    run();
}

double SolveSession::node_update(int id, const std::vector<double>& omega_old,
                                 const std::vector<double>& psi_old, double* omega_new_out,
                                 std::vector<double>& psi_new) const {
    const SkeletonNode& nd = skel_->node(id);
    double mx = 0.0;
    for (int sid = nd.slot_begin; sid < nd.slot_end; ++sid) {
        const PairSlot& sl = skel_->slot(sid);
        double s = omega_old[sl.child_x] + omega_old[sl.child_y];
        double v = s / 3.0;
        psi_new[sid] = v;
        double d = std::fabs(v - psi_old[sid]);
        if (d > mx) mx = d;
    }
    int p_max = skel_->params().p_max;
    double tsum = grouped_theta_sum(nd.types, [&](const TypeEntry& t) {
        return type_theta_sq(
            t, p_max, [&](int sid) { return phi_[sid]; },
            [&](int sid) { return psi_old[sid]; });
    });
    double head = fsup_[id] * fsup_[id] + fosc_[id] * fosc_[id];
    double v = (head + tsum) / 6.0;
    double d = std::fabs(v - omega_old[id]);
    if (d > mx) mx = d;
    *omega_new_out = v;
    return mx;
}

double SolveSession::sweep_serial(std::vector<double>& omega_new,
                                  std::vector<double>& psi_new) const {
    double res = 0.0;
    int n = skel_->node_count();
    for (int id = 0; id < n; ++id) {
        double mx = node_update(id, omega_sq_, psi_sq_, &omega_new[id], psi_new);
        if (mx > res) res = mx;
    }
    return res;
}

double SolveSession::sweep_parallel(std::vector<double>& omega_new,
                                    std::vector<double>& psi_new) const {
    double res = 0.0;
    int n = skel_->node_count();
#pragma omp parallel for schedule(static) reduction(max : res)
    for (int id = 0; id < n; ++id) {
        double mx = node_update(id, omega_sq_, psi_sq_, &omega_new[id], psi_new);
        if (mx > res) res = mx;
    }
    return res;
}

void SolveSession::run() {
    const NormParams& pr = skel_->params();
    std::vector<double> omega_new(omega_sq_.size()), psi_new(psi_sq_.size());
    for (int sweep = 1; sweep <= pr.max_sweeps; ++sweep) {
        double res = pr.parallel ? sweep_parallel(omega_new, psi_new)
                                 : sweep_serial(omega_new, psi_new);
        omega_sq_.swap(omega_new);
        psi_sq_.swap(psi_new);
        residual_history_.push_back(res);
        if (res <= pr.fp_tol) return;
    }
    throw InternalError("fixed-point sweep failed to reach the residual target");
}

double SolveSession::omega_sq_unreachable(std::uint64_t mask) {
    int id = skel_->node_of_mask(mask);
    if (id >= 0) return omega_sq_[id];
    auto it = overlay_.find(mask);
    if (it != overlay_.end()) return it->second;

    const TopSpace& sp = skel_->space();
    const NormParams& pr = skel_->params();
    ScanResult sc = scan_node(sp, skel_->table(), skel_->seqs(), skel_->seq_weights(), pr, mask);
    PointSet L{mask, Tail::none};
    double fsup = sup_abs_over(sp, f_, L);
    double fosc = osc_over(sp, f_, L);
    std::vector<double> phis(sc.pairs.size()), psis(sc.pairs.size());
    for (std::size_t k = 0; k < sc.pairs.size(); ++k) {
        phis[k] = phi_from_masks(f_, mask, sc.pairs[k]);
        double ox = omega_sq_unreachable(mask & sc.pairs[k].x_mask);
        double oy = omega_sq_unreachable(mask & sc.pairs[k].y_mask);
        double s = ox + oy;
        psis[k] = s / 3.0;
    }
    double tsum = grouped_theta_sum(sc.types, [&](const TypeEntry& t) {
        return type_theta_sq(
            t, pr.p_max, [&](int sid) { return phis[sid]; },
            [&](int sid) { return psis[sid]; });
    });
    double head = fsup * fsup + fosc * fosc;
    double v = (head + tsum) / 6.0;
    overlay_.emplace(mask, v);
    return v;
}

double SolveSession::omega_sq(PointSet L) {
    const TopSpace& sp = skel_->space();
    if (!L.subset_of(sp.universe()))
        throw ValidationError("set is not a subset of the space");
    return omega_sq_unreachable(L.bits);
}

double SolveSession::omega(PointSet L) { return std::sqrt(omega_sq(L)); }

double SolveSession::psi_sq(PointSet L, const std::vector<PointSet>& Mside,
                            const std::vector<PointSet>& Nside) {
    const TopSpace& sp = skel_->space();
    if (!L.subset_of(sp.universe()))
        throw ValidationError("set is not a subset of the space");
    DerivedTable& table = skel_->table();
    auto is_member = [&](const PointSet& s) {
        for (const IndexSeq& seq : skel_->seqs()) {
            const DerivedEntry& de = table.derive(seq);
            if (de.fam.symbolic) {
                if (s.tail == Tail::none && s.explicit_count() == 1 &&
                    s.subset_of(de.fam.domain))
                    return true;
                continue;
            }
            for (const PointSet& m : de.fam.members)
                if (m == s) return true;
        }
        return false;
    };
    for (const PointSet& s : Mside)
        if (!is_member(s)) throw ValidationError("a min-side set is not a family member");
    for (const PointSet& s : Nside)
        if (!is_member(s)) throw ValidationError("a max-side set is not a family member");
    Separators sep = separators(sp, Mside, Nside);
    double ox = omega_sq_unreachable(L.bits & sep.X.bits);
    double oy = omega_sq_unreachable(L.bits & sep.Y.bits);
    double s = ox + oy;
    return s / 3.0;
}

double SolveSession::theta(PointSet L, const IndexSeq& i, const IndexSeq& j, int m, int n) {
    const TopSpace& sp = skel_->space();
    if (!L.subset_of(sp.universe()))
        throw ValidationError("set is not a subset of the space");
    std::vector<BPair> pairs = enumerate_B(skel_->table(), L, m, n, i, j);
    const NormParams& pr = skel_->params();
    double acc = 0.0;
    for (int p = 1; p <= pr.p_max; ++p) {
        double best = 0.0;
        bool first = true;
        for (const BPair& bp : pairs) {
            double ph = phi_gap(sp, f_, L, bp.M, bp.N);
            Separators sep = separators(sp, bp.M, bp.N);
            double ox = omega_sq_unreachable(L.bits & sep.X.bits);
            double oy = omega_sq_unreachable(L.bits & sep.Y.bits);
            double s = ox + oy;
            double ps = s / 3.0;
            double v = 0.5 * (ph * ph + ps / p);
            if (first || v > best) {
                best = v;
                first = false;
            }
        }
        acc += std::ldexp(best, -p);
    }
    return std::sqrt(acc);
}

double SolveSession::theta_p(int p, PointSet L, const IndexSeq& i, const IndexSeq& j, int m,
                             int n) {
    if (p < 1) throw ValidationError("the regularization index must be at least 1");
    const TopSpace& sp = skel_->space();
    if (!L.subset_of(sp.universe()))
        throw ValidationError("set is not a subset of the space");
    std::vector<BPair> pairs = enumerate_B(skel_->table(), L, m, n, i, j);
    double best = 0.0;
    for (const BPair& bp : pairs) {
        double ph = phi_gap(sp, f_, L, bp.M, bp.N);
        Separators sep = separators(sp, bp.M, bp.N);
        double ox = omega_sq_unreachable(L.bits & sep.X.bits);
        double oy = omega_sq_unreachable(L.bits & sep.Y.bits);
        double s = ox + oy;
        double ps = s / 3.0;
        double v = 0.5 * (ph * ph + ps / p);
        if (v > best) best = v;
    }
    return std::sqrt(best);
}

double SolveSession::theta_p_pair(int p, PointSet L, const std::vector<PointSet>& Mside,
                                  const std::vector<PointSet>& Nside) {
    if (p < 1) throw ValidationError("the regularization index must be at least 1");
    double ph = phi_gap(skel_->space(), f_, L, Mside, Nside);
    double ps = psi_sq(L, Mside, Nside);
    double v = 0.5 * (ph * ph + ps / p);
    return std::sqrt(v);
}

double SolveSession::truncation_delta() {
    if (delta_ >= 0.0) return delta_;
    const NormParams& pr = skel_->params();
    if (!skel_->truncation_dropped()) {
        double worst = 0.0;
        for (int id = 0; id < skel_->node_count(); ++id) {
            const SkeletonNode& nd = skel_->node(id);
            double acc = 0.0;
            for (const TypeEntry& t : nd.types) {
                double ub = 0.0;
                for (int sid : t.slots) {
                    double v = 0.5 * (phi_[sid] * phi_[sid] + fsup_[id] * fsup_[id]);
                    if (v > ub) ub = v;
                }
                acc += t.coef * ub;
            }
            double cand = std::ldexp(acc, -pr.p_max) / 6.0;
            if (cand > worst) worst = cand;
        }
        delta_ = worst;
    } else {
        double gap = skel_->mass_full() - skel_->mass_kept();
        if (gap < 0.0) gap = 0.0;
        double mass = gap + skel_->mass_kept() * std::ldexp(1.0, -pr.p_max);
        delta_ = mass * (fsup_full_ * fsup_full_) / 6.0;
    }
    return delta_;
}

// ── Solver ──────────────────────────────────────────────────────────────────

Solver::Solver(const TopSpace& space, NormParams params) : space_(&space), params_(params) {
    params_.validate();
    require_discrete(space);
}

void Solver::add_covering(const LevelCovering& cov) {
    if (&cov.space() != space_)
        throw ValidationError("covering was built on a different space");
    coverings_.push_back(&cov);
}

const LevelCovering& Solver::covering_for_level(int level) const {
    if (level < 1) throw ValidationError("levels start at 1");
    const LevelCovering* fallback = nullptr;
    for (const LevelCovering* c : coverings_) {
        if (c->all_levels()) {
            fallback = c;
        } else if (c->level() == level) {
            return *c;
        }
    }
    if (fallback) return *fallback;
    throw ValidationError("no covering registered for level " + std::to_string(level));
}

std::shared_ptr<const Skeleton> Solver::skeleton_for(const LevelCovering& cov) {
    auto it = skeletons_.find(&cov);
    if (it != skeletons_.end()) return it->second;
    auto sk = std::make_shared<Skeleton>(cov, params_);
    skeletons_.emplace(&cov, sk);
    return sk;
}

SolveSession Solver::session(const RealFunction& f, int level, InitMode init) {
    return SolveSession(skeleton_for(covering_for_level(level)), f, init);
}

NormResult Solver::norm(const RealFunction& f) {
    validate_function(*space_, f);
    NormResult out;
    std::map<const LevelCovering*, std::unique_ptr<SolveSession>> sessions;
    double err_lo = 0.0, err_hi = 0.0;
    for (int level = 1; level <= params_.l_max; ++level) {
        const LevelCovering& cov = covering_for_level(level);
        auto it = sessions.find(&cov);
        if (it == sessions.end())
            it = sessions
                     .emplace(&cov, std::make_unique<SolveSession>(skeleton_for(cov), f))
                     .first;
        SolveSession& sess = *it->second;
        double osq = sess.omega_sq_at(0);
        out.value_sq += std::ldexp(osq, -(level + 1));
        LevelReport rep;
        rep.level = level;
        rep.omega_k = std::sqrt(osq);
        rep.residual = sess.final_residual();
        rep.sweeps = sess.sweeps();
        rep.delta = sess.truncation_delta();
        err_lo += std::ldexp(2.0 * rep.residual, -(level + 1));
        err_hi += std::ldexp(3.0 * rep.delta + 2.0 * rep.residual, -(level + 1));
        out.levels.push_back(rep);
    }
    double fsup = sup_abs_over(*space_, f, space_->universe());
    out.lo_sq = std::max(0.0, out.value_sq - err_lo);
    out.hi_sq = out.value_sq + err_hi + std::ldexp(fsup * fsup, -(params_.l_max + 1));
    out.value = std::sqrt(out.value_sq);
    out.error_bound = std::max(out.value - std::sqrt(out.lo_sq),
                               std::sqrt(out.hi_sq) - out.value);
    return out;
}

}  // namespace cklur

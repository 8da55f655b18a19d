#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cklur/families.hpp"
#include "cklur/space.hpp"

namespace cklur {

// ── Run parameters ──────────────────────────────────────────────────────────

struct NormParams {
    int l_max = 4;    // metric levels 1..l_max enter the norm
    int i_max = 4;    // index sequences range over {0..i_max-1}
    int mn_max = 2;   // member-count caps in the pair sums
    int p_max = 8;    // dyadic regularization depth
    double fp_tol = 1e-10;    // fixed-point residual target (squared-value scale)
    double strict_tol = 1e-9; // margin for strict inequalities in the analysis layer
    std::uint64_t seed = 1;
    bool parallel = true;     // OpenMP sweep; bit-identical to the serial path
    int max_sweeps = 100000;
    // Weight override per index sequence; empty means the built-in dyadic rule.
    std::map<std::vector<int>, double> weight_override;

    void validate() const;  // throws ValidationError
};

// Built-in weight of an index sequence: 2^-(sum of 2^entry).  Summing over all
// strictly increasing sequences gives exactly 1.
double default_weight(const IndexSeq& seq);
double weight_of(const NormParams& params, const IndexSeq& seq);

// ── Elementary pieces ───────────────────────────────────────────────────────

// Averaged positive gap between the maxima of f over L ∩ cl N (N in the max
// side) and the minima over L ∩ cl M (M in the min side).  Every member must
// meet L.
double phi_gap(const TopSpace& space, const RealFunction& f, PointSet L,
               const std::vector<PointSet>& Mside, const std::vector<PointSet>& Nside);

struct BPair {
    std::vector<PointSet> M, N;
};

// All pairs of m-element / n-element sublists of the derived families at i and
// j whose members meet L and whose unions have disjoint closures, in a fixed
// lexicographic order.  Refuses families that meet L in infinitely many
// members.
std::vector<BPair> enumerate_B(DerivedTable& table, PointSet L, int m, int n,
                               const IndexSeq& i, const IndexSeq& j);

struct Separators {
    PointSet X, Y;  // closed, X ∪ Y = K, X misses ∪N, Y misses ∪M
};

// Complementary separators of the selected member lists: complements of the
// minimal open supersets of ∪N and ∪M.  On a discrete space this is exactly
// X = K∖∪N, Y = K∖∪M.  Throws UnsupportedError when no disjoint open
// separation exists.
Separators separators(const TopSpace& space, const std::vector<PointSet>& Mside,
                      const std::vector<PointSet>& Nside);

// ── Solve skeleton (f-independent) ──────────────────────────────────────────

// One candidate pair at a node, with precomputed member closures and children.
struct PairSlot {
    std::vector<PointSet> M, N;
    std::vector<std::uint64_t> mcl, ncl;  // closure masks of the members
    std::uint64_t x_mask = 0, y_mask = 0; // separator masks
    int child_x = -1, child_y = -1;       // node ids of L∩X and L∩Y
};

struct TypeEntry {
    int i_rank = 0, j_rank = 0;  // ranks into the skeleton's sequence list
    int m = 1, n = 1;
    double coef = 0.0;           // c(i) c(j) 2^-(m+n)
    std::vector<int> slots;      // global slot ids
    int swap_partner = -1;       // index of the (j,i,n,m) entry in the same node
};

struct SkeletonNode {
    std::uint64_t mask = 0;
    std::vector<TypeEntry> types;
    int slot_begin = 0, slot_end = 0;  // global slot id range of this node
};

// Everything about one covering that does not depend on f: reachable sets,
// their candidate pairs, separators, children, and coefficient data.
class Skeleton {
public:
    Skeleton(const LevelCovering& cov, const NormParams& params);

    const TopSpace& space() const { return cov_->space(); }
    const LevelCovering& covering() const { return *cov_; }
    const NormParams& params() const { return params_; }
    // The derived-family memo is fully warmed during construction; afterwards
    // lookups are read-only, so sharing across sessions (and probe threads)
    // is safe.
    DerivedTable& table() const { return table_; }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const SkeletonNode& node(int id) const { return nodes_[id]; }
    const PairSlot& slot(int sid) const { return slots_[sid]; }
    int slot_count() const { return static_cast<int>(slots_.size()); }
    int node_of_mask(std::uint64_t mask) const;  // -1 when unreachable
    const std::vector<IndexSeq>& seqs() const { return seqs_; }
    const std::vector<double>& seq_weights() const { return weights_; }
    double seq_weight(int rank) const { return weights_[rank]; }

    bool truncation_dropped() const { return dropped_; }
    double mass_full() const { return mass_full_; }
    double mass_kept() const { return mass_kept_; }

private:
    int ensure_node(std::uint64_t mask);
    void build_node_types(int id);

    const LevelCovering* cov_;
    NormParams params_;
    mutable DerivedTable table_;
    std::vector<IndexSeq> seqs_;   // truncated sequence list, prec order
    std::vector<double> weights_;
    std::vector<SkeletonNode> nodes_;
    std::vector<PairSlot> slots_;
    std::unordered_map<std::uint64_t, int> node_index_;
    bool dropped_ = false;
    double mass_full_ = 0.0, mass_kept_ = 0.0;
};

// ── Per-function solve ──────────────────────────────────────────────────────

enum class InitMode { zero, sup };  // start tables at 0 or at the sup bound

// Iterates the defining relations as a synchronous sweep until the residual
// (max change of any squared table entry) drops to fp_tol.  Tables store
// squared values.  The parallel sweep is bit-identical to the serial one.
class SolveSession {
public:
    SolveSession(std::shared_ptr<const Skeleton> skel, RealFunction f,
                 InitMode init = InitMode::zero);

    const Skeleton& skeleton() const { return *skel_; }
    const RealFunction& function() const { return f_; }

    int sweeps() const { return static_cast<int>(residual_history_.size()); }
    double final_residual() const {
        return residual_history_.empty() ? 0.0 : residual_history_.back();
    }
    const std::vector<double>& residual_history() const { return residual_history_; }

    // Squared tables; L may be any subset (unreachable sets are computed on
    // demand through the same relations and memoized in this session).
    double omega_sq(PointSet L);
    double omega(PointSet L);
    double psi_sq(PointSet L, const std::vector<PointSet>& Mside,
                  const std::vector<PointSet>& Nside);
    double theta(PointSet L, const IndexSeq& i, const IndexSeq& j, int m, int n);
    double theta_p(int p, PointSet L, const IndexSeq& i, const IndexSeq& j, int m, int n);
    double theta_p_pair(int p, PointSet L, const std::vector<PointSet>& Mside,
                        const std::vector<PointSet>& Nside);

    double sup_norm() const { return fsup_full_; }  // ‖f‖∞ over the whole space
    // One-sided operator discrepancy of the truncation for this f; the
    // distance between the truncated and untruncated fixed points is at most
    // 3x this value (squared-value scale).
    double truncation_delta();

    // Stored tables by id (reachable part), for dumps and equality tests.
    double omega_sq_at(int node_id) const { return omega_sq_[node_id]; }
    double psi_sq_at(int slot_id) const { return psi_sq_[slot_id]; }
    double phi_at(int slot_id) const { return phi_[slot_id]; }

private:
    void run();
    double sweep_serial(std::vector<double>& on, std::vector<double>& np) const;
    double sweep_parallel(std::vector<double>& on, std::vector<double>& np) const;
    double node_update(int id, const std::vector<double>& omega_old,
                       const std::vector<double>& psi_old, double* max_delta,
                       std::vector<double>& psi_new) const;
    double theta_sq_of_type(const TypeEntry& t, const std::vector<double>& psi_old) const;
    double omega_sq_unreachable(std::uint64_t mask);

    std::shared_ptr<const Skeleton> skel_;
    RealFunction f_;
    std::vector<double> fsup_, fosc_;  // per node
    std::vector<double> phi_;          // per slot
    std::vector<double> omega_sq_, psi_sq_;
    std::vector<double> residual_history_;
    double fsup_full_ = 0.0;
    std::unordered_map<std::uint64_t, double> overlay_;  // on-demand nodes
    double delta_ = -1.0;
};

// ── Norm assembly ───────────────────────────────────────────────────────────

struct LevelReport {
    int level = 0;
    double omega_k = 0.0;      // Ω(f, K, level)
    double residual = 0.0;
    int sweeps = 0;
    double delta = 0.0;
};

struct NormResult {
    double value = 0.0;        // computed norm
    double error_bound = 0.0;  // |true - value| is certified at most this
    double value_sq = 0.0;
    double lo_sq = 0.0, hi_sq = 0.0;  // certified bracket for the squared norm
    std::vector<LevelReport> levels;
};

// Owns the skeletons for one space + parameter set; coverings are registered
// per level.  The norm layer requires a finite discrete space.
class Solver {
public:
    Solver(const TopSpace& space, NormParams params);

    void add_covering(const LevelCovering& cov);
    const LevelCovering& covering_for_level(int level) const;
    const NormParams& params() const { return params_; }
    const TopSpace& space() const { return *space_; }

    std::shared_ptr<const Skeleton> skeleton_for(const LevelCovering& cov);
    // Fresh numeric session for f over the covering at `level`.
    SolveSession session(const RealFunction& f, int level, InitMode init = InitMode::zero);

    NormResult norm(const RealFunction& f);

private:
    const TopSpace* space_;
    NormParams params_;
    std::vector<const LevelCovering*> coverings_;
    std::map<const LevelCovering*, std::shared_ptr<const Skeleton>> skeletons_;
};

}  // namespace cklur

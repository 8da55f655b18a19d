#include "cklur/instance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cklur/errors.hpp"

namespace cklur {

const RealFunction& Instance::function(const std::string& fname) const {
    for (const auto& [n, f] : functions)
        if (n == fname) return f;
    throw ValidationError("no function named '" + fname + "' in instance '" + name + "'");
}

bool Instance::has_function(const std::string& fname) const {
    for (const auto& [n, f] : functions)
        if (n == fname) return true;
    return false;
}

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": " + msg);
}

bool valid_name(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

double parse_number(const std::string& tok, const std::string& origin, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v))
            fail(origin, line, "bad number '" + tok + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        fail(origin, line, "bad number '" + tok + "'");
    }
}

int parse_int(const std::string& tok, const std::string& origin, int line) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) fail(origin, line, "bad integer '" + tok + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        fail(origin, line, "bad integer '" + tok + "'");
    }
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// Resolve a single element inside braces to (bit id | tail part).
struct SetBuilder {
    const TopSpace* space;
    std::string origin;
    int line;

    PointSet parse(const std::string& token) const {
        if (token == "all") return space->universe();
        if (token.size() < 2 || token.front() != '{' || token.back() != '}')
            fail(origin, line, "bad set token '" + token + "' (expected {..} or all)");
        PointSet out;
        std::string body = token.substr(1, token.size() - 2);
        if (body.empty()) return out;
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            std::size_t comma = body.find(',', pos);
            std::string el = body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                         : comma - pos);
            pos = comma == std::string::npos ? std::string::npos : comma + 1;
            if (el.empty()) fail(origin, line, "empty element in set token");
            if (space->kind() == SpaceKind::sequence) {
                if (el == "tail") {
                    out.tail = tail_union(out.tail, Tail::full);
                    continue;
                }
                if (el == "tail-even") {
                    out.tail = tail_union(out.tail, Tail::even);
                    continue;
                }
                if (el == "tail-odd") {
                    out.tail = tail_union(out.tail, Tail::odd);
                    continue;
                }
            }
            int id = space->point_index(el);
            if (id < 0) {
                if (space->kind() == SpaceKind::sequence && !el.empty() &&
                    std::isdigit(static_cast<unsigned char>(el[0])))
                    fail(origin, line,
                         "point '" + el + "' is beyond the cutoff; tail points are "
                         "addressed as tail/tail-even/tail-odd");
                fail(origin, line, "unknown point '" + el + "'");
            }
            out.bits |= std::uint64_t{1} << id;
        }
        return out;
    }
};

struct Parser {
    std::string origin;
    std::vector<std::pair<int, std::vector<std::string>>> rows;  // (line, tokens)
    std::size_t at = 0;

    Instance inst;
    std::set<std::string> func_names;
    std::set<int> covering_levels;
    bool covering_all_seen = false;

    explicit Parser(const std::string& text, std::string orig) : origin(std::move(orig)) {
        std::istringstream is(text);
        std::string raw;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            std::size_t hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            std::vector<std::string> toks = split_ws(raw);
            if (!toks.empty()) rows.emplace_back(line, std::move(toks));
        }
    }

    bool done() const { return at >= rows.size(); }
    int line() const { return done() ? (rows.empty() ? 0 : rows.back().first) : rows[at].first; }
    const std::vector<std::string>& toks() const { return rows[at].second; }

    const TopSpace& need_space(const std::string& what) {
        if (!inst.space)
            fail(origin, line(), what + " must come after the space block");
        return *inst.space;
    }

    PointSet set_tok(const std::string& token) {
        return SetBuilder{&need_space("a set token"), origin, line()}.parse(token);
    }

    void run() {
        while (!done()) {
            const auto& t = toks();
            if (t[0] == "space") {
                parse_space();
            } else if (t[0] == "func") {
                parse_func();
            } else if (t[0] == "covering") {
                parse_covering();
            } else {
                fail(origin, line(), "expected a 'space', 'func' or 'covering' block, got '" +
                                         t[0] + "'");
            }
        }
        if (!inst.space) fail(origin, 1, "no space block in file");
    }

    void parse_space() {
        int head = line();
        const auto t = toks();
        if (inst.space) fail(origin, head, "only one space block per file");
        if (t.size() != 2 || !valid_name(t[1]))
            fail(origin, head, "usage: space <name>");
        inst.name = t[1];
        ++at;

        std::optional<SpaceKind> kind;
        std::vector<std::string> names;
        std::map<std::string, int> name_id;
        std::vector<PointSet> nbhds;
        std::vector<std::vector<double>> dist;
        std::vector<std::vector<char>> dist_set;
        int cutoff = -1;
        MetricRule rule = MetricRule::table;
        bool rule_set = false;

        auto point_id = [&](const std::string& nm) {
            auto it = name_id.find(nm);
            if (it == name_id.end()) fail(origin, line(), "unknown point '" + nm + "'");
            return it->second;
        };
        // Finite-kind set token, usable before the TopSpace exists.
        auto raw_set = [&](const std::string& token) {
            if (token == "all") {
                PointSet u;
                for (std::size_t i = 0; i < names.size(); ++i)
                    u.bits |= std::uint64_t{1} << i;
                return u;
            }
            if (token.size() < 2 || token.front() != '{' || token.back() != '}')
                fail(origin, line(), "bad set token '" + token + "'");
            PointSet out;
            std::string body = token.substr(1, token.size() - 2);
            std::size_t pos = 0;
            while (!body.empty() && pos != std::string::npos) {
                std::size_t comma = body.find(',', pos);
                std::string el = body.substr(pos, comma == std::string::npos
                                                      ? std::string::npos
                                                      : comma - pos);
                pos = comma == std::string::npos ? std::string::npos : comma + 1;
                if (el.empty()) fail(origin, line(), "empty element in set token");
                out.bits |= std::uint64_t{1} << point_id(el);
            }
            return out;
        };

        bool closed = false;
        while (!done()) {
            const auto& r = toks();
            if (r[0] == "end") {
                ++at;
                closed = true;
                break;
            }
            if (r[0] == "kind") {
                if (kind) fail(origin, line(), "duplicate 'kind'");
                if (r.size() != 2) fail(origin, line(), "usage: kind finite|sequence");
                if (r[1] == "finite")
                    kind = SpaceKind::finite;
                else if (r[1] == "sequence")
                    kind = SpaceKind::sequence;
                else
                    fail(origin, line(), "unknown kind '" + r[1] + "'");
            } else if (r[0] == "points") {
                if (!kind || *kind != SpaceKind::finite)
                    fail(origin, line(), "'points' needs kind finite (declared first)");
                if (!names.empty()) fail(origin, line(), "duplicate 'points'");
                if (r.size() < 2) fail(origin, line(), "usage: points <name>...");
                for (std::size_t q = 1; q < r.size(); ++q) {
                    if (!valid_name(r[q]))
                        fail(origin, line(), "bad point name '" + r[q] + "'");
                    if (!name_id.emplace(r[q], static_cast<int>(names.size())).second)
                        fail(origin, line(), "duplicate point name '" + r[q] + "'");
                    names.push_back(r[q]);
                }
                int n = static_cast<int>(names.size());
                nbhds.resize(n);
                for (int q = 0; q < n; ++q) nbhds[q] = PointSet::single(q);
                dist.assign(n, std::vector<double>(n, 1.0));
                for (int q = 0; q < n; ++q) dist[q][q] = 0.0;
                dist_set.assign(n, std::vector<char>(n, 0));
            } else if (r[0] == "nbhd") {
                if (names.empty()) fail(origin, line(), "'nbhd' needs 'points' first");
                if (r.size() != 4 || r[2] != "=")
                    fail(origin, line(), "usage: nbhd <point> = <set>");
                nbhds[point_id(r[1])] = raw_set(r[3]);
            } else if (r[0] == "dist") {
                if (names.empty()) fail(origin, line(), "'dist' needs 'points' first");
                if (r.size() != 5 || r[3] != "=")
                    fail(origin, line(), "usage: dist <a> <b> = <value>");
                int a = point_id(r[1]), b = point_id(r[2]);
                double v = parse_number(r[4], origin, line());
                if (dist_set[a][b] && dist[a][b] != v)
                    fail(origin, line(), "conflicting distance breaks metric symmetry (" +
                                             names[std::min(a, b)] + "," + names[std::max(a, b)] +
                                             ")");
                dist[a][b] = dist[b][a] = v;
                dist_set[a][b] = dist_set[b][a] = 1;
            } else if (r[0] == "cutoff") {
                if (!kind || *kind != SpaceKind::sequence)
                    fail(origin, line(), "'cutoff' needs kind sequence (declared first)");
                if (r.size() != 2) fail(origin, line(), "usage: cutoff <n>");
                cutoff = parse_int(r[1], origin, line());
            } else if (r[0] == "metric") {
                if (!kind || *kind != SpaceKind::sequence)
                    fail(origin, line(), "'metric' needs kind sequence (declared first)");
                if (r.size() != 2) fail(origin, line(), "usage: metric dyadic|harmonic");
                if (r[1] == "dyadic")
                    rule = MetricRule::dyadic;
                else if (r[1] == "harmonic")
                    rule = MetricRule::harmonic;
                else
                    fail(origin, line(), "unknown metric '" + r[1] + "'");
                rule_set = true;
            } else {
                fail(origin, line(), "unknown space field '" + r[0] + "'");
            }
            ++at;
        }
        if (!closed) fail(origin, line(), "space block not closed with 'end'");
        if (!kind) fail(origin, head, "space block needs 'kind'");
        try {
            if (*kind == SpaceKind::finite) {
                if (names.empty()) fail(origin, head, "finite space needs 'points'");
                inst.space = std::make_unique<TopSpace>(
                    TopSpace::make_finite(names, nbhds, dist));
            } else {
                if (cutoff < 0) fail(origin, head, "sequence space needs 'cutoff'");
                if (!rule_set) fail(origin, head, "sequence space needs 'metric'");
                inst.space = std::make_unique<TopSpace>(TopSpace::make_sequence(cutoff, rule));
            }
        } catch (const ValidationError& e) {
            fail(origin, head, std::string("invalid space: ") + e.what());
        }
    }

    void parse_func() {
        int head = line();
        const auto t = toks();
        need_space("a 'func' block");
        if (t.size() != 2 || !valid_name(t[1])) fail(origin, head, "usage: func <name>");
        std::string fname = t[1];
        if (!func_names.insert(fname).second)
            fail(origin, head, "duplicate function name '" + fname + "'");
        ++at;

        const TopSpace& sp = *inst.space;
        int heads = sp.kind() == SpaceKind::sequence ? sp.cutoff() : sp.explicit_points();
        std::vector<double> values(heads, 0.0);
        std::vector<char> have(heads, 0);
        std::optional<double> tail_value, default_value;

        bool closed = false;
        while (!done()) {
            const auto& r = toks();
            if (r[0] == "end") {
                ++at;
                closed = true;
                break;
            }
            if (r[0] == "at") {
                if (r.size() != 4 || r[2] != "=") fail(origin, line(), "usage: at <point> = <value>");
                int id = sp.point_index(r[1]);
                if (id < 0) fail(origin, line(), "unknown point '" + r[1] + "'");
                if (sp.kind() == SpaceKind::sequence && id >= sp.cutoff())
                    fail(origin, line(), "the limit takes the tail value; use 'tail ='");
                if (have[id]) fail(origin, line(), "duplicate value for '" + r[1] + "'");
                values[id] = parse_number(r[3], origin, line());
                have[id] = 1;
            } else if (r[0] == "tail") {
                if (sp.kind() != SpaceKind::sequence)
                    fail(origin, line(), "'tail' applies to sequence spaces only");
                if (r.size() != 3 || r[1] != "=") fail(origin, line(), "usage: tail = <value>");
                if (tail_value) fail(origin, line(), "duplicate 'tail'");
                tail_value = parse_number(r[2], origin, line());
            } else if (r[0] == "default") {
                if (r.size() != 3 || r[1] != "=") fail(origin, line(), "usage: default = <value>");
                if (default_value) fail(origin, line(), "duplicate 'default'");
                default_value = parse_number(r[2], origin, line());
            } else {
                fail(origin, line(), "unknown func field '" + r[0] + "'");
            }
            ++at;
        }
        if (!closed) fail(origin, line(), "func block not closed with 'end'");
        for (int id = 0; id < heads; ++id) {
            if (!have[id]) {
                if (!default_value)
                    fail(origin, head, "function '" + fname + "' has no value at '" +
                                           sp.point_name(id) + "' and no default");
                values[id] = *default_value;
            }
        }
        RealFunction f;
        f.values = std::move(values);
        if (sp.kind() == SpaceKind::sequence) {
            if (!tail_value && !default_value)
                fail(origin, head, "function '" + fname + "' needs 'tail =' (or a default)");
            f.tail_value = tail_value ? *tail_value : *default_value;
        }
        try {
            validate_function(sp, f);
        } catch (const ValidationError& e) {
            fail(origin, head, std::string("invalid function '") + fname + "': " + e.what());
        }
        inst.functions.emplace_back(fname, std::move(f));
    }

    void parse_covering() {
        int head = line();
        const auto t = toks();
        const TopSpace& sp = need_space("a 'covering' block");
        int level = 0;
        bool all_levels = false;
        if (t.size() == 2 && t[1] == "all") {
            all_levels = true;
            if (covering_all_seen) fail(origin, head, "duplicate 'covering all'");
            covering_all_seen = true;
        } else if (t.size() == 3 && t[1] == "level") {
            level = parse_int(t[2], origin, head);
            if (level < 0) fail(origin, head, "covering level must be nonnegative");
            if (!covering_levels.insert(level).second)
                fail(origin, head, "duplicate covering for level " + std::to_string(level));
        } else {
            fail(origin, head, "usage: covering level <k> | covering all");
        }
        ++at;

        std::vector<Family> families;
        std::vector<std::vector<PointSet>> witnesses;
        std::vector<std::vector<char>> witness_set;

        bool closed = false;
        while (!done()) {
            const auto& r = toks();
            if (r[0] == "end") {
                ++at;
                closed = true;
                break;
            }
            if (r[0] == "family") {
                if (r.size() < 3 || r[1] != "=") fail(origin, line(), "usage: family = <members>");
                try {
                    if (r[2] == "singletons") {
                        if (r.size() > 4) fail(origin, line(), "usage: family = singletons [<set>]");
                        PointSet domain;
                        if (r.size() == 4) {
                            domain = set_tok(r[3]);
                        } else if (sp.kind() == SpaceKind::sequence) {
                            domain = sp.universe().minus(PointSet::single(sp.limit_id()));
                        } else {
                            domain = sp.universe();
                        }
                        if (sp.kind() == SpaceKind::sequence) {
                            families.push_back(make_symbolic_family(sp, domain));
                        } else {
                            std::vector<PointSet> ms;
                            for_each_explicit(domain,
                                              [&](int id) { ms.push_back(PointSet::single(id)); });
                            families.push_back(make_explicit_family(sp, std::move(ms)));
                        }
                    } else {
                        std::vector<PointSet> ms;
                        for (std::size_t q = 2; q < r.size(); ++q) ms.push_back(set_tok(r[q]));
                        families.push_back(make_explicit_family(sp, std::move(ms)));
                    }
                } catch (const ValidationError& e) {
                    fail(origin, line(), std::string("invalid family: ") + e.what());
                }
                witnesses.emplace_back();
                witness_set.emplace_back();
            } else if (r[0] == "witness") {
                if (r.size() != 5 || r[3] != "=")
                    fail(origin, line(), "usage: witness <family> <member> = <set>");
                int fi = parse_int(r[1], origin, line());
                int mi = parse_int(r[2], origin, line());
                if (fi < 0 || fi >= static_cast<int>(families.size()))
                    fail(origin, line(), "witness family index out of range");
                const Family& fam = families[fi];
                if (fam.symbolic)
                    fail(origin, line(), "symbolic families carry no explicit witnesses");
                int nm = static_cast<int>(fam.members.size());
                if (mi < 0 || mi >= nm) fail(origin, line(), "witness member index out of range");
                if (witnesses[fi].empty()) {
                    witnesses[fi] = fam.members;  // default: each member is its own witness
                    witness_set[fi].assign(nm, 0);
                }
                if (witness_set[fi][mi]) fail(origin, line(), "duplicate witness");
                witnesses[fi][mi] = set_tok(r[4]);
                witness_set[fi][mi] = 1;
            } else {
                fail(origin, line(), "unknown covering field '" + r[0] + "'");
            }
            ++at;
        }
        if (!closed) fail(origin, line(), "covering block not closed with 'end'");
        if (families.empty()) fail(origin, head, "covering needs at least one family");
        try {
            inst.coverings.push_back(std::make_unique<LevelCovering>(
                build_covering(sp, level, all_levels, std::move(families), std::move(witnesses))));
        } catch (const ValidationError& e) {
            fail(origin, head, std::string("invalid covering: ") + e.what());
        }
    }
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Instance parse_instance_text(const std::string& text, const std::string& origin) {
    Parser p(text, origin);
    p.run();
    return std::move(p.inst);
}

Instance parse_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_instance_text(ss.str(), path);
}

PointSet parse_set_token(const TopSpace& space, const std::string& token) {
    return SetBuilder{&space, "<arg>", 1}.parse(token);
}

std::string serialize_instance(const Instance& inst) {
    const TopSpace& sp = inst.top();
    std::ostringstream out;
    out << "space " << inst.name << "\n";
    if (sp.kind() == SpaceKind::finite) {
        out << "kind finite\npoints";
        for (int i = 0; i < sp.explicit_points(); ++i) out << " " << sp.point_name(i);
        out << "\n";
        for (int i = 0; i < sp.explicit_points(); ++i)
            if (sp.min_nbhd(i) != PointSet::single(i))
                out << "nbhd " << sp.point_name(i) << " = " << sp.set_to_string(sp.min_nbhd(i))
                    << "\n";
        for (int a = 0; a < sp.explicit_points(); ++a)
            for (int b = a + 1; b < sp.explicit_points(); ++b)
                out << "dist " << sp.point_name(a) << " " << sp.point_name(b) << " = "
                    << fmt_double(sp.dist(a, b)) << "\n";
    } else {
        out << "kind sequence\ncutoff " << sp.cutoff() << "\n";
        out << "metric " << (sp.metric_rule() == MetricRule::dyadic ? "dyadic" : "harmonic")
            << "\n";
    }
    out << "end\n";
    for (const auto& [fname, f] : inst.functions) {
        out << "\nfunc " << fname << "\n";
        for (std::size_t i = 0; i < f.values.size(); ++i)
            out << "at " << sp.point_name(static_cast<int>(i)) << " = " << fmt_double(f.values[i])
                << "\n";
        if (sp.kind() == SpaceKind::sequence)
            out << "tail = " << fmt_double(f.tail_value) << "\n";
        out << "end\n";
    }
    for (const auto& cov : inst.coverings) {
        out << "\ncovering " << (cov->all_levels() ? "all" : "level " + std::to_string(cov->level()))
            << "\n";
        for (int i = 0; i < cov->family_count(); ++i) {
            const Family& fam = cov->family(i);
            if (fam.symbolic) {
                out << "family = singletons " << sp.set_to_string(fam.domain) << "\n";
            } else {
                out << "family =";
                for (const PointSet& m : fam.members) out << " " << sp.set_to_string(m);
                out << "\n";
            }
        }
        for (int i = 0; i < cov->family_count(); ++i) {
            if (cov->family(i).symbolic) continue;
            const std::vector<PointSet>& ws = cov->witnesses(i);
            for (std::size_t k = 0; k < ws.size(); ++k)
                if (ws[k] != cov->family(i).members[k])
                    out << "witness " << i << " " << k << " = " << sp.set_to_string(ws[k]) << "\n";
        }
        out << "end\n";
    }
    return out.str();
}

}  // namespace cklur

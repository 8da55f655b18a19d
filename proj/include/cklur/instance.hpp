#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cklur/families.hpp"
#include "cklur/space.hpp"

namespace cklur {

// A parsed problem instance: one space, named functions on it, and coverings
// keyed by metric level.  Space and coverings live behind stable pointers so
// solver structures may hold references across moves.
struct Instance {
    std::string name;
    std::unique_ptr<TopSpace> space;
    std::vector<std::pair<std::string, RealFunction>> functions;
    std::vector<std::unique_ptr<LevelCovering>> coverings;

    const TopSpace& top() const { return *space; }
    const RealFunction& function(const std::string& fname) const;
    bool has_function(const std::string& fname) const;
};

// Text format, line oriented, `#` comments.  Blocks:
//
//   space <name>            func <name>          covering level <k>
//   kind finite             at a = 0.25          covering all
//   points a b c            tail = 0.0           family = {a} {b}
//   nbhd b = {a,b}          default = 0.0        family = singletons {0,2,tail-even}
//   dist a b = 0.5          end                  witness 0 1 = {b}
//   end                                          end
//
//   kind sequence           set tokens: {a,b}, {0,3,tail-odd,inf}, all, {}
//   cutoff 8
//   metric dyadic
//
// Exactly one space per file; it must precede functions and coverings.
Instance parse_instance_text(const std::string& text, const std::string& origin);
Instance parse_instance_file(const std::string& path);

// One set token against an existing space ("{a,b}", "{0,tail,inf}", "all").
PointSet parse_set_token(const TopSpace& space, const std::string& token);

// Canonical text for an instance; parsing it back yields the same semantics
// (families are stored regularized, so the serialized form is a fixpoint).
std::string serialize_instance(const Instance& inst);

}  // namespace cklur

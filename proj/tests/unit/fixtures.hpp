#pragma once
// Setups and moduli spaces shared by several test files, built once per process.
#include <map>
#include <memory>
#include <utility>

#include "cleanmorse/gluing.hpp"

namespace fixtures {

struct Torus {
    cleanmorse::MorseSetup setup;
    std::unique_ptr<cleanmorse::FlowContext> ctx;
    int p, q, r, s;
    std::map<std::pair<int, int>, cleanmorse::ModuliSpace> moduli;  // (p,q) and (q,r)

    const cleanmorse::ModuliSpace& M(int a, int b) const { return moduli.at({a, b}); }
};

inline const Torus& torus() {
    // heap-held: the flow context keeps a pointer to the setup
    static const Torus* const shared = [] {
        using namespace cleanmorse;
        auto* t = new Torus;
        t->setup = make_builtin_setup("upright_torus");
        t->ctx = std::make_unique<FlowContext>(t->setup, FlowOptions{});
        t->p = t->setup.crit_index("p");
        t->q = t->setup.crit_index("q");
        t->r = t->setup.crit_index("r");
        t->s = t->setup.crit_index("s");
        const SearchConfig sc;
        for (auto [a, b] : {std::pair{t->p, t->q}, std::pair{t->q, t->r}})
            t->moduli.emplace(std::make_pair(a, b), find_moduli(*t->ctx, a, b, sc));
        return t;
    }();
    return *shared;
}

}  // namespace fixtures

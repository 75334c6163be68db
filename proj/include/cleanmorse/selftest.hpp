#pragma once
// Property suites behind the `selftest` command. Seeded, fast, no trajectories.
#include <string>
#include <vector>

namespace cleanmorse {

struct SelftestResult {
    std::string name;
    bool ok = false;
    std::string detail;
};

std::vector<SelftestResult> run_selftest(unsigned seed);

}  // namespace cleanmorse

#pragma once
// Dormand-Prince 5(4) with adaptive step control. Integration may run
// forward or backward in s; an observer sees every accepted step and may
// stop the run (chart switches and capture tests live there).
#include <functional>

#include "cleanmorse/linalg.hpp"

namespace cleanmorse {

using Rhs = std::function<void(double s, const Vec& y, Vec& dy)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double h0 = 1e-2;
    double hmax = 0.25;
    int error_dims = -1;  // only the leading components enter the error norm
    long max_steps = 5000000;
};

enum class StepAction { Continue, Stop };

using Observer = std::function<StepAction(double s, const Vec& y)>;

struct OdeResult {
    double s = 0.0;
    Vec y;
    bool stopped = false;
    long steps = 0;
    double h_next = 0.0;
};

OdeResult integrate(const Rhs& rhs, double s0, const Vec& y0, double s_end,
                    const OdeOptions& opt, const Observer& observer = nullptr);

// One Dormand-Prince step of size h without error control.
Vec dp_step(const Rhs& rhs, double s, const Vec& y, double h);

}  // namespace cleanmorse

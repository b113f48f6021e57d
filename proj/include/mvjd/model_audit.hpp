#pragma once

#include <cstdint>

#include "mvjd/model.hpp"

// Randomized numerical audits of the drift assumptions. Violations come with
// concrete witnesses; these are samplers, not symbolic verifiers.

namespace mvjd::model {

struct H1AuditReport {
    bool pass = false;
    double max_excess = 0.0;  // max over pairs of LHS - RHS, pass iff <= 1e-12
    double witness_x = 0.0;
    double witness_y = 0.0;
    int pairs = 0;
};

// Checks (x-y)(b(x,mu)-b(y,mu)) <= (l1+l2)|x-y|^2 1{|x-y|<=ell0} - l2|x-y|^2
// over sampled pairs from [-box, box]^2. The measure argument cancels for
// this family, so mu is held fixed.
H1AuditReport audit_h1(const DriftSpec& spec, double ell0, double lambda1,
                       double lambda2, int n_pairs, double box, std::uint64_t seed);

struct H2AuditReport {
    bool pass = false;
    double max_ratio = 0.0;  // max |b(x,mu)-b(x,mubar)| / W1(mu,mubar)
    int trials = 0;
    int skipped = 0;  // degenerate W1 = 0 pairs
};

// Checks |b(x,mu)-b(x,mubar)| <= lambda3 W1(mu,mubar) over random empirical
// measure pairs (sizes <= 64) with W1 computed exactly.
H2AuditReport audit_h2(const DriftSpec& spec, int n_trials, std::uint64_t seed);

} // namespace mvjd::model

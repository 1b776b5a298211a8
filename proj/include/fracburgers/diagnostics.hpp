// diagnostics.hpp: structured pass/fail result for one inequality or
// invariant check. Every diagnostic in the suite returns one of these so the
// CLI can serialize them uniformly.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace fracburgers {

struct DiagnosticReport {
    std::string name;
    bool passed = false;
    // Measured constants, residuals and tolerances, keyed by stable names.
    // std::map keeps emission order deterministic.
    std::map<std::string, double> measured;
    std::vector<std::string> flags;
    std::string notes;

    double at(const std::string& key) const { return measured.at(key); }
};

}  // namespace fracburgers

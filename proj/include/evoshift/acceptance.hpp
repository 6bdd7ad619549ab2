#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace evoshift {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// Runs every acceptance criterion, printing one pass/fail line per criterion.
// Returns the number of failures.
int run_acceptance(std::ostream& out, std::vector<CriterionResult>* results = nullptr);

}  // namespace evoshift

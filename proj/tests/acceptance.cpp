#include <cstdlib>
#include <iostream>

#include "mcwb/acceptance.hpp"

int main(int argc, char** argv) {
    mcwb::AcceptanceOptions opt;
    if (argc > 1) opt.jobs = std::max(1, std::atoi(argv[1]));
    bool ok = true;
    mcwb::runAcceptance("all", opt, [&](const mcwb::CriterionResult& r) {
        std::cout << r.line() << " (" << r.seconds << " s)" << std::endl;
        ok = ok && r.passed;
    });
    return ok ? EXIT_SUCCESS : EXIT_FAILURE;
}

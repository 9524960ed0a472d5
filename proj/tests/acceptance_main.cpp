// Acceptance gate: runs every criterion suite and prints one line each.
#include <iostream>

#include "tdp/verify.hpp"

int main() {
    const int failures = tdp::accept::run_suites(std::cout);
    if (failures) {
        std::cout << failures << " criterion suite(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}

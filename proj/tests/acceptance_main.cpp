#include <cstdlib>
#include <iostream>

#include "evoshift/acceptance.hpp"

int main() {
    const int failures = evoshift::run_acceptance(std::cout);
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

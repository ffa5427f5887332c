// Runs the full acceptance battery and exits with the failure count.
#include <iostream>

#include "upset/acceptance.hpp"

int main() {
    upset::AcceptanceOptions opts;
    int failures = upset::run_acceptance({}, opts, std::cout);
    if (failures > 0) std::cout << failures << " criteria failed\n";
    return failures;
}

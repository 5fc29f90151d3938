#pragma once

#include <stdexcept>
#include <string>

namespace polarwave {

// Invalid arguments or values outside a function's domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// The requested wave exists mathematically but cells would pass through each other.
class PhysicalityError : public std::runtime_error {
public:
    explicit PhysicalityError(const std::string& what) : std::runtime_error(what) {}
};

// Integrator blow-up, unresolved contour, failed bracketing and friends.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace polarwave

#pragma once

#include <stdexcept>
#include <string>

namespace ahlfors {

enum class ErrorKind { Domain, Precondition, Input, Budget, Structural };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

// Raised when an operation is called outside its stated preconditions,
// including the "word too short" case of Birkhoff sums.
struct PreconditionError : Error {
    explicit PreconditionError(const std::string& w) : Error(ErrorKind::Precondition, w) {}
};

struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::Input, w) {}
};

struct StructuralError : Error {
    explicit StructuralError(const std::string& w) : Error(ErrorKind::Structural, w) {}
};

// Carries whatever was accumulated before the budget ran out.
class BudgetError : public Error {
public:
    BudgetError(const std::string& w, double partial)
        : Error(ErrorKind::Budget, w), partial_(partial) {}
    double partial() const noexcept { return partial_; }

private:
    double partial_;
};

}  // namespace ahlfors

#ifndef ZIPGRID_ERRORS_HPP
#define ZIPGRID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace zipgrid {

// Base error. kind() is a stable machine-parsable tag; the CLI prints
// "error: <kind>: <message>" on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ZIPGRID_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& message)                    \
            : Error(#Name, message) {}                               \
    }

ZIPGRID_DEFINE_ERROR(NonPositiveParameter);
ZIPGRID_DEFINE_ERROR(NonPositiveVoltage);
ZIPGRID_DEFINE_ERROR(SelfLoop);
ZIPGRID_DEFINE_ERROR(DisconnectedGraph);
ZIPGRID_DEFINE_ERROR(RankDeficientTransform);
ZIPGRID_DEFINE_ERROR(NewtonDivergence);
ZIPGRID_DEFINE_ERROR(NetworkNotScalar);
ZIPGRID_DEFINE_ERROR(NonFiniteState);
ZIPGRID_DEFINE_ERROR(InsufficientSamples);
ZIPGRID_DEFINE_ERROR(ParseError);
ZIPGRID_DEFINE_ERROR(SchemaViolation);
ZIPGRID_DEFINE_ERROR(InvariantViolation);
ZIPGRID_DEFINE_ERROR(IoError);

#undef ZIPGRID_DEFINE_ERROR

} // namespace zipgrid

#endif

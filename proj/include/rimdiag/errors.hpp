#pragma once

#include <stdexcept>
#include <string>

namespace rimdiag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration loading.
class SchemaError : public Error {
public:
    using Error::Error;
};
class ReferenceError : public Error {
public:
    using Error::Error;
};
class OrderError : public Error {
public:
    using Error::Error;
};

// Lookups.
class UnknownStep : public Error {
public:
    using Error::Error;
};
class UnknownSensor : public Error {
public:
    using Error::Error;
};

// Constraint checking and diagnosis.
class NotUnsat : public Error {
public:
    using Error::Error;
};
class UnknownSensorInTrace : public Error {
public:
    using Error::Error;
};
class TraceIncomplete : public Error {
public:
    using Error::Error;
};

// Simulation and file formats.
class InvalidFault : public Error {
public:
    using Error::Error;
};
class MalformedLog : public Error {
public:
    using Error::Error;
};
class MalformedTrace : public Error {
public:
    using Error::Error;
};

} // namespace rimdiag

#pragma once

#include <stdexcept>
#include <string>

namespace finpos {

// Error categories map onto CLI exit codes: usage=1, data=2, provider=3.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a metric has no defined value (e.g. zero-variance Sharpe).
class MetricError : public DataError {
public:
    explicit MetricError(const std::string& msg) : DataError(msg) {}
};

class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

class RateLimitError : public ProviderError {
public:
    RateLimitError(const std::string& msg, int retry_after_s)
        : ProviderError(msg), retry_after_seconds(retry_after_s) {}
    int retry_after_seconds = 0;
};

}  // namespace finpos

#pragma once

#include <stdexcept>

namespace feedaudit {

/// Invalid catalog, platform or scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file on disk has the wrong magic header, version or layout.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is present but unusable for the requested analysis.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recall could not assemble a full batch of unseen candidates.
class PoolExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A puppet sent an event the platform cannot accept (e.g. liking an
/// unserved post). Always indicates a bug in the audit driver.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace feedaudit

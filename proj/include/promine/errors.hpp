#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace promine {

enum class ErrorKind {
  Schema,     // malformed declarations: missing columns, unknown types
  Row,        // a specific input row is invalid
  EmptyLog,   // operation requires a non-empty log
  EmptyModel, // operation requires a non-empty model
  Integrity,  // referential integrity broken
  Query,      // query references something that does not exist
  Config,     // invalid option combination
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error schema_error(std::string msg) { return Error(ErrorKind::Schema, std::move(msg)); }
inline Error row_error(std::string msg) { return Error(ErrorKind::Row, std::move(msg)); }
inline Error empty_log_error(std::string msg) { return Error(ErrorKind::EmptyLog, std::move(msg)); }
inline Error empty_model_error(std::string msg) { return Error(ErrorKind::EmptyModel, std::move(msg)); }
inline Error integrity_error(std::string msg) { return Error(ErrorKind::Integrity, std::move(msg)); }
inline Error query_error(std::string msg) { return Error(ErrorKind::Query, std::move(msg)); }
inline Error config_error(std::string msg) { return Error(ErrorKind::Config, std::move(msg)); }

}  // namespace promine

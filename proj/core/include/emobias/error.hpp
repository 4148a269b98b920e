#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace emobias {

// Base class for every recoverable error raised by the library. The CLI maps
// these to exit code 2 ("data error").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(const std::string& label)
      : Error("unknown label: " + label), label_(label) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class InvalidDirection : public Error {
 public:
  InvalidDirection(int from_level, int to_level);
};

class InvalidHierarchy : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id)
      : Error("duplicate id: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class MissingLabel : public Error {
 public:
  MissingLabel(const std::string& record_id, int level);
};

class InsufficientSamples : public Error {
 public:
  InsufficientSamples(const std::string& cls, std::size_t requested, std::size_t available);
  const std::string& class_name() const noexcept { return class_; }
  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::string class_;
  std::size_t requested_;
  std::size_t available_;
};

class MissingFeature : public Error {
 public:
  explicit MissingFeature(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(int epoch, std::size_t batch);
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

class EmptyCleanSet : public Error {
 public:
  EmptyCleanSet() : Error("self-directed training needs a non-empty clean seed set") {}
};

class DivisionDomain : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class UnknownConcept : public Error {
 public:
  explicit UnknownConcept(const std::string& concept_name)
      : Error("unknown concept: " + concept_name) {}
};

class NoConcepts : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  explicit UnsupportedFormat(const std::string& format)
      : Error("unsupported report format: " + format) {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emobias

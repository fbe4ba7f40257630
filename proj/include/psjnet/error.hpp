#ifndef PSJNET_ERROR_HPP_
#define PSJNET_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psjnet {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PSJNET_DEFINE_ERROR(Name)        \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// numkernel
PSJNET_DEFINE_ERROR(ShapeError);
PSJNET_DEFINE_ERROR(RankError);
PSJNET_DEFINE_ERROR(NumericsError);

// model
PSJNET_DEFINE_ERROR(VocabError);
PSJNET_DEFINE_ERROR(ConfigError);
PSJNET_DEFINE_ERROR(NormalizationError);
PSJNET_DEFINE_ERROR(JoinError);
PSJNET_DEFINE_ERROR(EmptyLossError);
PSJNET_DEFINE_ERROR(CheckpointError);

// trainer
PSJNET_DEFINE_ERROR(TrainingError);

// data
PSJNET_DEFINE_ERROR(SimulationError);
PSJNET_DEFINE_ERROR(FormatError);
PSJNET_DEFINE_ERROR(SplitError);

// eval
PSJNET_DEFINE_ERROR(IndexError);
PSJNET_DEFINE_ERROR(DegenerateTestError);

// files
PSJNET_DEFINE_ERROR(IoError);

#undef PSJNET_DEFINE_ERROR

// Malformed sequence-file token. `column` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& detail, std::size_t column)
      : Error(detail + " (column " + std::to_string(column) + ")"),
        detail_(detail),
        column_(column) {}
  std::size_t column() const { return column_; }
  // Message without the column suffix, for re-wrapping with more context.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t column_;
};

}  // namespace psjnet

#endif  // PSJNET_ERROR_HPP_

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace snerv {

// Base for all domain errors. name() is the stable machine-readable code
// used by the CLI's error JSON.
class Error : public std::runtime_error {
public:
  Error(std::string name, const std::string& msg)
      : std::runtime_error(msg), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

private:
  std::string name_;
};

#define SNERV_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                        \
  public:                                                            \
    explicit Name(const std::string& msg) : Error(#Name, msg) {}     \
  };

SNERV_DEFINE_ERROR(ZeroSpectrum)
SNERV_DEFINE_ERROR(EmptyRoi)
SNERV_DEFINE_ERROR(DimensionMismatch)
SNERV_DEFINE_ERROR(UnknownChromophore)
SNERV_DEFINE_ERROR(ShapeMismatch)
SNERV_DEFINE_ERROR(NegativeInput)
SNERV_DEFINE_ERROR(NonPositiveInput)
SNERV_DEFINE_ERROR(DegenerateData)
SNERV_DEFINE_ERROR(TooFewSamples)
SNERV_DEFINE_ERROR(ModelMismatch)
SNERV_DEFINE_ERROR(TooFewClasses)
SNERV_DEFINE_ERROR(InvalidCut)
SNERV_DEFINE_ERROR(EmptyCluster)
SNERV_DEFINE_ERROR(SamplingExhausted)
SNERV_DEFINE_ERROR(MissingInput)
SNERV_DEFINE_ERROR(ConfigInvalid)
SNERV_DEFINE_ERROR(UpstreamStale)

#undef SNERV_DEFINE_ERROR

class FormatError : public Error {
public:
  FormatError(const std::string& msg, std::uint64_t byte_offset)
      : Error("FormatError",
              msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::uint64_t byte_offset() const { return byte_offset_; }

private:
  std::uint64_t byte_offset_;
};

}  // namespace snerv

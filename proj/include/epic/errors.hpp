#pragma once

#include <stdexcept>
#include <string>

namespace epic {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// configuration / input files
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// encoding
struct SequenceTooLong : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };

// model / training
struct InvalidSpec : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

// aggregation
struct IncompatibleShapes : Error { using Error::Error; };
struct EmptyContributionList : Error { using Error::Error; };

// evaluation / protocol
struct EmptyTestSet : Error { using Error::Error; };
struct NoDataError : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// synthetic data
struct SpecInfeasible : Error { using Error::Error; };

// checkpoints
struct FingerprintMismatch : Error { using Error::Error; };

} // namespace epic

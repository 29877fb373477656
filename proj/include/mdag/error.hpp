#ifndef MDAG_ERROR_HPP
#define MDAG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdag {

enum class ErrorCode {
    CycleDetected,
    BadParentIndex,
    DimensionMismatch,
    PointOutsideNoiseBounds,
    BadComponentIndex,
    AllComponentsZeroDensity,
    SingularObservedBlock,
    ShapeMismatch,
    NonPsdScatter,
    EmptyFamily,
    ChildInParents,
    NegativeCount,
    SingularParentBlock,
    InsufficientData,
    EmptyTestSet,
    InvalidArgument,
    ScheduleSyntax,
    RaggedRow,
    NonNumericCell,
    EmptyFile,
    VersionMismatch,
    CorruptFile,
    InvalidConfig,
    Io,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::BadParentIndex: return "BadParentIndex";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::PointOutsideNoiseBounds: return "PointOutsideNoiseBounds";
        case ErrorCode::BadComponentIndex: return "BadComponentIndex";
        case ErrorCode::AllComponentsZeroDensity: return "AllComponentsZeroDensity";
        case ErrorCode::SingularObservedBlock: return "SingularObservedBlock";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonPsdScatter: return "NonPsdScatter";
        case ErrorCode::EmptyFamily: return "EmptyFamily";
        case ErrorCode::ChildInParents: return "ChildInParents";
        case ErrorCode::NegativeCount: return "NegativeCount";
        case ErrorCode::SingularParentBlock: return "SingularParentBlock";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::EmptyTestSet: return "EmptyTestSet";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ScheduleSyntax: return "ScheduleSyntax";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// True for failures caused by the numerics rather than by the inputs' shape or content.
inline bool is_numerical(ErrorCode code) {
    switch (code) {
        case ErrorCode::AllComponentsZeroDensity:
        case ErrorCode::SingularObservedBlock:
        case ErrorCode::NonPsdScatter:
        case ErrorCode::SingularParentBlock:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

}  // namespace mdag

#endif  // MDAG_ERROR_HPP
